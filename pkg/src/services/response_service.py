"""
Response Service
Driven steady state a = ((omega + i kappa/2) I - H)^-1 d and frequency scans
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.signal import find_peaks

from src.services.dynamics_service import excitation_sites
from src.services.model_service import Hamiltonian, ModelParams, SiteLayout
from src.services.spectra_service import eig
from src.utils.errors import InputError, ResonanceError
from src.utils.validators import (
    validate_increasing_grid, validate_non_negative, validate_site
)

logger = logging.getLogger(__name__)

DEFAULT_KAPPA = 0.1
CONDITION_LIMIT = 1e12
RESIDUAL_TOL = 1e-10
STABILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DriveSpec:
    """Drive amplitudes per site, frequency grid and uniform loss kappa."""
    entries: Tuple[Tuple[int, complex], ...]
    omegas: np.ndarray
    kappa: float
    total_sites: int

    def vector(self) -> np.ndarray:
        drive = np.zeros(self.total_sites, dtype=complex)
        for site, amplitude in self.entries:
            drive[site] += amplitude
        return drive


@dataclass(frozen=True, eq=False)
class DriveScan:
    """intensities[k, site] = |a_site(omegas[k])|^2."""
    omegas: np.ndarray
    intensities: np.ndarray
    drive: DriveSpec
    params: Optional[ModelParams]

    def site_intensity(self, site: int) -> np.ndarray:
        return self.intensities[:, site]


def make_drive_spec(entries: Iterable[Tuple[int, complex]], omegas: Sequence[float],
                    kappa: float, total_sites: int) -> DriveSpec:
    entries = [(site, complex(amplitude)) for site, amplitude in entries]
    if not entries:
        raise InputError("drive needs at least one entry")

    for site, amplitude in entries:
        is_valid, error = validate_site(site, total_sites, 'drive site')
        if not is_valid:
            raise InputError(error)
        if not (math.isfinite(amplitude.real) and math.isfinite(amplitude.imag)):
            raise InputError(f"drive amplitude at site {site} must be finite")

    omegas = [float(omega) for omega in omegas]
    is_valid, error = validate_increasing_grid(omegas, 'omega grid')
    if not is_valid:
        raise InputError(error)

    is_valid, error = validate_non_negative(kappa, 'kappa')
    if not is_valid:
        raise InputError(error)

    spec = DriveSpec(tuple(entries), np.array(omegas), float(kappa), total_sites)
    if not np.any(spec.vector()):
        raise InputError("drive needs at least one nonzero amplitude")
    return spec


def drive_spec_from_preset(name: str, layout: SiteLayout, omegas: Sequence[float],
                           kappa: float = DEFAULT_KAPPA) -> DriveSpec:
    """Unit drive on the preset sites: interface, first, both_ends or uniform."""
    sites = excitation_sites(name, layout)
    return make_drive_spec([(site, 1.0) for site in sites], omegas, kappa, layout.total_sites)


def steady_state(H: Hamiltonian, drive: DriveSpec, omega: float) -> np.ndarray:
    """Amplitude vector of the driven lossy array at one frequency."""
    if drive.total_sites != H.dimension:
        raise InputError(f"drive is defined on {drive.total_sites} sites, Hamiltonian has {H.dimension}")

    z = omega + 0.5j * drive.kappa
    system = z * np.eye(H.dimension) - H.matrix
    d = drive.vector()

    condition = np.linalg.cond(system)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        eigenvalues = np.linalg.eigvals(H.matrix)
        closest = complex(eigenvalues[np.argmin(np.abs(eigenvalues - z))])
        raise ResonanceError(
            f"omega={omega:g}, kappa={drive.kappa:g} sits on eigenvalue {closest:.6g} "
            f"(condition {condition:.3e})",
            closest_eigenvalue=closest,
        )

    a = np.linalg.solve(system, d)
    residual = np.linalg.norm(system @ a - d)
    if residual > RESIDUAL_TOL * np.linalg.norm(d):
        logger.warning("Steady-state residual %.3e at omega=%g", residual, omega)
    return a


def _check_stability(H: Hamiltonian, kappa: float):
    if kappa > 0:
        return
    growth = eig(H).max_imag
    # Real eigenvalues count as non-decaying
    if growth >= -STABILITY_TOL * max(np.linalg.norm(H.matrix, 2), 1.0):
        raise InputError(
            f"kappa must be > 0 when H has an eigenvalue with Im E >= 0 (max Im E = {growth:.3g})"
        )


def drive_scan(H: Hamiltonian, spec: DriveSpec, jobs: int = 1) -> DriveScan:
    """One steady-state solve per grid frequency, merged in grid order."""
    _check_stability(H, spec.kappa)

    def solve(omega):
        return np.abs(steady_state(H, spec, omega)) ** 2

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(solve, spec.omegas))
    else:
        rows = [solve(omega) for omega in spec.omegas]

    logger.info(
        "Scanned %d frequencies over [%g, %g], kappa=%g",
        len(spec.omegas), spec.omegas[0], spec.omegas[-1], spec.kappa
    )
    return DriveScan(
        omegas=spec.omegas,
        intensities=np.array(rows),
        drive=spec,
        params=H.params,
    )


def resonance_frequencies(scan: DriveScan, site: int) -> List[float]:
    """Frequencies of the local maxima of the intensity at one site."""
    is_valid, error = validate_site(site, scan.intensities.shape[1], 'site')
    if not is_valid:
        raise InputError(error)
    peaks, _ = find_peaks(scan.site_intensity(site))
    return [float(scan.omegas[k]) for k in peaks]
