"""
CSV Handler
DataFrame builders for every result schema and byte-deterministic CSV export
"""

import pandas as pd
import numpy as np
from typing import Dict, List, Any, Optional
import logging

from src.utils.errors import OutputError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12g'

# Column order per schema
SWEEP_COLUMNS = ['t2', 'index', 're_E', 'im_E']
SWEEP_SUMMARY_COLUMNS = ['t2', 'zero_mode_count', 'max_abs_imag']
IPR_COLUMNS = ['t2', 'index', 're_E', 'ipr']
SPECTRUM_COLUMNS = ['index', 're_E', 'im_E', 'ipr', 'is_zero_mode', 'class']
MODES_COLUMNS = ['index', 'site', 'abs_amplitude']
EVOLUTION_COLUMNS = ['t', 'site', 'population', 'log_norm']
PULSES_COLUMNS = ['panel', 'site', 't']
ROBUSTNESS_COLUMNS = [
    'panel', 'defect_site', 'defect_strength', 'excitation', 'accumulation',
    'baseline_accumulation', 'ratio', 'pulses', 'baseline_pulses', 'interface_correlation'
]
SCAN_COLUMNS = ['omega', 'site', 'intensity']


def _long_frame(first_name: str, first_values: np.ndarray, second_name: str,
                matrix: np.ndarray, columns: List[str], extra: Optional[Dict[str, np.ndarray]] = None) -> pd.DataFrame:
    """Flatten matrix[row, col] into one row per (first value, column index)."""
    rows, cols = matrix.shape
    data = {
        first_name: np.repeat(np.asarray(first_values), cols),
        second_name: np.tile(np.arange(cols), rows),
    }
    for name, values in (extra or {}).items():
        data[name] = np.asarray(values).reshape(-1)
    return pd.DataFrame(data, columns=columns)


def sweep_frame(grid: np.ndarray, eigenvalues: np.ndarray, rank: str = 'real') -> pd.DataFrame:
    """
    One row per eigenvalue per t2.
    rank='real' orders by (Re, Im), rank='imag' by (Im, Re).
    """
    if rank == 'imag':
        order = np.array([np.lexsort((row.real, row.imag)) for row in eigenvalues])
        eigenvalues = np.take_along_axis(eigenvalues, order, axis=1)

    return _long_frame('t2', grid, 'index', eigenvalues, SWEEP_COLUMNS, {
        're_E': eigenvalues.real,
        'im_E': eigenvalues.imag,
    })


def sweep_summary_frame(grid: np.ndarray, counts: np.ndarray, max_abs_imag: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({
        't2': grid,
        'zero_mode_count': counts,
        'max_abs_imag': max_abs_imag,
    }, columns=SWEEP_SUMMARY_COLUMNS)


def ipr_frame(grid: np.ndarray, eigenvalues: np.ndarray, iprs: np.ndarray) -> pd.DataFrame:
    return _long_frame('t2', grid, 'index', eigenvalues, IPR_COLUMNS, {
        're_E': eigenvalues.real,
        'ipr': iprs,
    })


def spectrum_frame(eigenvalues: np.ndarray, iprs: np.ndarray, zero_indices: List[int],
                   classes: List[str]) -> pd.DataFrame:
    zero = set(zero_indices)
    return pd.DataFrame({
        'index': np.arange(len(eigenvalues)),
        're_E': eigenvalues.real,
        'im_E': eigenvalues.imag,
        'ipr': iprs,
        'is_zero_mode': [int(k in zero) for k in range(len(eigenvalues))],
        'class': classes,
    }, columns=SPECTRUM_COLUMNS)


def modes_frame(vectors: np.ndarray) -> pd.DataFrame:
    """|psi_k(site)| for every eigenvector k (columns of vectors)."""
    amplitudes = np.abs(vectors).T
    return _long_frame('index', np.arange(amplitudes.shape[0]), 'site', amplitudes, MODES_COLUMNS, {
        'abs_amplitude': amplitudes,
    })


def evolution_frame(times: np.ndarray, populations: np.ndarray, log_norms: np.ndarray) -> pd.DataFrame:
    sites = populations.shape[1]
    return _long_frame('t', times, 'site', populations, EVOLUTION_COLUMNS, {
        'population': populations,
        'log_norm': np.repeat(log_norms, sites),
    })


def pulses_frame(pulses: Dict[str, List[float]], site: int) -> pd.DataFrame:
    rows = [
        {'panel': panel, 'site': site, 't': t}
        for panel, times in pulses.items()
        for t in times
    ]
    return pd.DataFrame(rows, columns=PULSES_COLUMNS)


def robustness_frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=ROBUSTNESS_COLUMNS)


def scan_frame(omegas: np.ndarray, intensities: np.ndarray) -> pd.DataFrame:
    return _long_frame('omega', omegas, 'site', intensities, SCAN_COLUMNS, {
        'intensity': intensities,
    })


def frame_to_csv_bytes(df: pd.DataFrame) -> bytes:
    """Fixed float format and line ending so identical data gives identical bytes."""
    return df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n').encode('utf-8')


def write_csv(df: pd.DataFrame, path: str) -> str:
    """Write a frame; raises OutputError on I/O failure."""
    try:
        with open(path, 'wb') as f:
            f.write(frame_to_csv_bytes(df))
    except OSError as e:
        raise OutputError(f"Could not write {path}: {e}") from e

    logger.debug("Wrote %d rows to %s", len(df), path)
    return path
