"""
Manifest Service
Immutable record of every artifact written by a run, with content hashes
"""

from dataclasses import dataclass
from typing import List, Tuple
import hashlib
import logging
import os

from src.utils.errors import OutputError

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.txt'


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    sha256: str


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    try:
        with open(path, 'rb') as f:
            for chunk in iter(lambda: f.read(65536), b''):
                digest.update(chunk)
    except OSError as e:
        raise OutputError(f"Could not hash {path}: {e}") from e
    return digest.hexdigest()


def build_manifest(directory: str, files: List[str]) -> Tuple[ManifestEntry, ...]:
    """Entries in write order, paths relative to the output directory."""
    return tuple(
        ManifestEntry(os.path.relpath(path, directory).replace(os.sep, '/'), file_sha256(path))
        for path in files
    )


def write_manifest(directory: str, files: List[str]) -> str:
    """
    Write manifest.txt with one `path,sha256` line per artifact.
    The manifest never lists itself.
    """
    entries = build_manifest(directory, [f for f in files if os.path.basename(f) != MANIFEST_NAME])
    path = os.path.join(directory, MANIFEST_NAME)
    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            for entry in entries:
                f.write(f"{entry.path},{entry.sha256}\n")
    except OSError as e:
        raise OutputError(f"Could not write {path}: {e}") from e

    logger.info("Manifest lists %d artifact(s)", len(entries))
    return path


def read_manifest(path: str) -> Tuple[ManifestEntry, ...]:
    try:
        with open(path, encoding='utf-8') as f:
            lines = [line.strip() for line in f if line.strip()]
    except OSError as e:
        raise OutputError(f"Could not read {path}: {e}") from e
    return tuple(ManifestEntry(*line.rsplit(',', 1)) for line in lines)
