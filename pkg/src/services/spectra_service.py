"""
Spectra Service
Non-Hermitian eigenanalysis: spectra, t2 sweeps, IPR, zero modes and
the analytic interface states
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import scipy.linalg as la
from scipy.optimize import linear_sum_assignment

from src.services.model_service import (
    Hamiltonian, ModelParams, SiteLayout, build_hamiltonian
)
from src.utils.errors import InputError, SingularParameterError, SolverError
from src.utils.validators import validate_increasing_grid, validate_positive

logger = logging.getLogger(__name__)

DEFAULT_ZERO_TOL = 1e-6
RESIDUAL_TOL = 1e-9
# LAPACK's shifted QR iteration budget (ITMAX in ?hseqr), recorded for reporting
ITERATION_BUDGET_PER_DIM = 30
ZERO_MODE_PARTS = ('real', 'abs')


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues sorted by (real, imag); column k of right_eigenvectors pairs with eigenvalue k."""
    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    eigvec_condition: float
    residuals: np.ndarray

    @property
    def max_abs_imag(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag)))

    @property
    def max_imag(self) -> float:
        """Largest growth rate Im E."""
        return float(np.max(self.eigenvalues.imag))

    def __len__(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Per t2 grid point: sorted eigenvalues, IPR of each eigenvector, zero-mode count, max |Im E|."""
    grid: np.ndarray
    eigenvalues: np.ndarray
    iprs: np.ndarray
    zero_mode_counts: np.ndarray
    max_abs_imag: np.ndarray
    tol: float
    part: str


@dataclass(frozen=True)
class ModeClassification:
    """Eigenvector indices grouped by where |component| peaks."""
    type1_indices: Tuple[int, ...]
    type2_indices: Tuple[int, ...]
    other_indices: Tuple[int, ...]


def eig(H: Hamiltonian) -> Spectrum:
    """
    Dense eigen-decomposition (LAPACK ?geev: balancing, Hessenberg reduction,
    shifted QR). Eigenvectors are unit-norm with their largest component real positive.
    """
    try:
        return eig_matrix(H.matrix)
    except SolverError as e:
        p = H.params
        raise SolverError(
            f"t1={p.t1:g}, t2={p.t2:g}, delta={p.delta:g}, N={p.cells_per_chain}: {e}"
        ) from e


def eig_matrix(matrix: np.ndarray) -> Spectrum:
    matrix = np.asarray(matrix)
    if not np.all(np.isfinite(matrix)):
        raise InputError("Hamiltonian has non-finite entries")

    # Real input keeps conjugate pairs exact and real eigenvalues exactly real
    if np.iscomplexobj(matrix) and not np.any(matrix.imag):
        matrix = matrix.real

    try:
        values, vectors = la.eig(matrix)
    except (la.LinAlgError, ValueError) as e:
        budget = ITERATION_BUDGET_PER_DIM * matrix.shape[0]
        raise SolverError(f"eigensolver did not converge within {budget} QR sweeps: {e}") from e

    values = np.asarray(values, dtype=complex)
    vectors = np.asarray(vectors, dtype=complex)

    order = np.lexsort((values.imag, values.real))
    values = values[order]
    vectors = vectors[:, order]

    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    vectors = _fix_phases(vectors)

    residuals = np.linalg.norm(matrix @ vectors - vectors * values[np.newaxis, :], axis=0)
    scale = max(np.linalg.norm(matrix, 2), np.finfo(float).tiny)
    worst = float(np.max(residuals)) if len(residuals) else 0.0
    if worst > RESIDUAL_TOL * scale:
        logger.warning("Eigenpair residual %.3e exceeds %.1e * ||H||", worst, RESIDUAL_TOL)

    with np.errstate(all='ignore'):
        condition = float(np.linalg.cond(vectors))
    if not math.isfinite(condition):
        condition = math.inf

    return Spectrum(
        eigenvalues=values,
        right_eigenvectors=vectors,
        eigvec_condition=condition,
        residuals=residuals,
    )


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest-magnitude entry is real positive."""
    peaks = np.argmax(np.abs(vectors), axis=0)
    anchors = vectors[peaks, np.arange(vectors.shape[1])]
    phases = np.where(np.abs(anchors) > 0, anchors / np.abs(anchors), 1.0)
    return vectors / phases[np.newaxis, :]


def ipr(state: np.ndarray) -> float:
    """Inverse participation ratio sum|psi_j|^4 / (sum|psi_j|^2)^2."""
    weights = np.abs(np.asarray(state, dtype=complex)) ** 2
    total = weights.sum()
    if total == 0:
        raise InputError("ipr of a zero vector is undefined")
    return float(np.sum(weights ** 2) / total ** 2)


def spectrum_iprs(spec: Spectrum) -> np.ndarray:
    return np.array([ipr(spec.right_eigenvectors[:, k]) for k in range(len(spec))])


def zero_modes(spec: Spectrum, tol: float = DEFAULT_ZERO_TOL, part: str = 'real') -> List[int]:
    """
    Indices of zero-energy modes.
    part='real' tests |Re E| < tol (zero modes of the real-part spectrum),
    part='abs' tests |E| < tol.
    """
    is_valid, error = validate_positive(tol, 'tol')
    if not is_valid:
        raise InputError(error)
    if part not in ZERO_MODE_PARTS:
        raise InputError(f"part must be one of: {', '.join(ZERO_MODE_PARTS)}")

    measure = np.abs(spec.eigenvalues.real) if part == 'real' else np.abs(spec.eigenvalues)
    return [int(k) for k in np.flatnonzero(measure < tol)]


def chiral_partner_error(eigenvalues: Sequence[complex]) -> float:
    """Largest distance in the optimal matching between {E} and {-E}."""
    values = np.asarray(eigenvalues, dtype=complex)
    cost = np.abs(values[:, np.newaxis] + values[np.newaxis, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def sublattice_weights(state: np.ndarray, layout: SiteLayout) -> Tuple[float, float]:
    """Weight fractions on the even (a, Q, B) and odd (b, A) sublattices."""
    weights = np.abs(np.asarray(state, dtype=complex)) ** 2
    total = weights.sum()
    if total == 0:
        raise InputError("sublattice weights of a zero vector are undefined")
    even = float(weights[layout.sublattice_signs() > 0].sum() / total)
    return even, 1.0 - even


def analytic_zero_mode(params: ModelParams) -> np.ndarray:
    """
    Interface zero mode generated by the H psi = 0 recursion on the even
    sublattice: psi[a_{n+1}] = r psi[a_n], psi[Q] = r psi[a_N], mirrored on
    the B sites, with r = -(t1 + delta) / (t2 - delta).
    """
    if params.J2p == 0:
        raise SingularParameterError(
            f"analytic zero mode needs t2 != delta (t2={params.t2}, delta={params.delta})"
        )
    r = -params.J1 / params.J2p
    layout = SiteLayout(params.cells_per_chain)
    N = layout.cells_per_chain

    # Exponent of r along the even sublattice: 0 at a1 and BN, N at Q
    powers = {layout.q: N}
    for n in range(1, N + 1):
        powers[layout.a(n)] = n - 1
        powers[layout.B(n)] = N - n

    # Reference the largest amplitude so that r^k cannot overflow
    shift = N if abs(r) >= 1 else 0
    state = np.zeros(layout.total_sites, dtype=complex)
    for site, k in powers.items():
        state[site] = _signed_power(r, k - shift)

    state /= np.linalg.norm(state)
    return _fix_phases(state[:, np.newaxis])[:, 0]


def _signed_power(r: float, k: int) -> float:
    if r == 0:
        return 1.0 if k == 0 else 0.0
    return math.copysign(1.0, r) ** k * abs(r) ** k


def analytic_bound_modes(params: ModelParams, atol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bound states of the J1' = J2' = 0 limit:
    psi1 on b_N and A_1 (equal magnitude, opposite sign), psi2 on Q only.
    """
    if abs(params.J1p) > atol:
        raise InputError(f"bound modes need J1' = t1 - delta = 0, got {params.J1p}")
    if abs(params.J2p) > atol:
        raise InputError(f"bound modes need J2' = t2 - delta = 0, got {params.J2p}")

    layout = SiteLayout(params.cells_per_chain)

    psi1 = np.zeros(layout.total_sites, dtype=complex)
    # Q receives J2 from both b_N and A_1, so the pair must cancel there
    psi1[layout.b_last] = 1.0 / math.sqrt(2.0)
    psi1[layout.a_first_l2] = -1.0 / math.sqrt(2.0)

    psi2 = np.zeros(layout.total_sites, dtype=complex)
    psi2[layout.q] = 1.0

    return psi1, psi2


def _sweep_point(base: ModelParams, t2: float, tol: float, part: str):
    spec = eig(build_hamiltonian(base.with_t2(t2)))
    count = len(zero_modes(spec, tol, part))
    logger.debug("t2=%g: %d zero mode(s), max|Im E|=%.3e", t2, count, spec.max_abs_imag)
    return spec.eigenvalues, spectrum_iprs(spec), count, spec.max_abs_imag


def sweep_t2(
    base: ModelParams,
    grid: Sequence[float],
    tol: float = DEFAULT_ZERO_TOL,
    part: str = 'real',
    jobs: int = 1
) -> SweepResult:
    """Spectrum of the defect-free model at every t2 of the grid."""
    grid = [float(t2) for t2 in grid]
    is_valid, error = validate_increasing_grid(grid, 't2 grid')
    if not is_valid:
        raise InputError(error)

    def run(t2):
        return _sweep_point(base, t2, tol, part)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(run, grid))
    else:
        points = [run(t2) for t2 in grid]

    logger.info("Swept %d t2 points over [%g, %g]", len(grid), grid[0], grid[-1])
    return SweepResult(
        grid=np.array(grid),
        eigenvalues=np.array([p[0] for p in points]),
        iprs=np.array([p[1] for p in points]),
        zero_mode_counts=np.array([p[2] for p in points], dtype=int),
        max_abs_imag=np.array([p[3] for p in points]),
        tol=tol,
        part=part,
    )


def zero_mode_transition(sweep: SweepResult) -> Optional[Tuple[float, float, int, int]]:
    """First grid interval where the zero-mode count changes: (t2_lo, t2_hi, count_lo, count_hi)."""
    counts = sweep.zero_mode_counts
    for k in range(1, len(counts)):
        if counts[k] != counts[k - 1]:
            return float(sweep.grid[k - 1]), float(sweep.grid[k]), int(counts[k - 1]), int(counts[k])
    return None


def classify_localization(spec: Spectrum, layout: SiteLayout) -> ModeClassification:
    """
    Argmax rule: peak at Q -> type 1, peak at b_N or A_1 -> type 2, else other.
    np.argmax picks the lowest index on ties.
    """
    type1, type2, other = [], [], []
    interface_neighbors = (layout.b_last, layout.a_first_l2)

    for k in range(len(spec)):
        peak = int(np.argmax(np.abs(spec.right_eigenvectors[:, k])))
        if peak == layout.q:
            type1.append(k)
        elif peak in interface_neighbors:
            type2.append(k)
        else:
            other.append(k)

    return ModeClassification(tuple(type1), tuple(type2), tuple(other))


def symmetrize(H: Hamiltonian) -> Tuple[np.ndarray, bool]:
    """
    Diagonal similarity D^-1 H D turning every bond pair (f, b) into sqrt(f b).
    valid is True iff every product f b > 0, in which case the result is
    Hermitian tridiagonal and isospectral to H.
    """
    matrix = np.asarray(H.matrix)

    if np.any(np.triu(matrix, 2)) or np.any(np.tril(matrix, -2)):
        raise InputError("symmetrize needs a nearest-neighbor (tridiagonal) Hamiltonian")

    forward = np.diagonal(matrix, -1).astype(complex)
    backward = np.diagonal(matrix, 1).astype(complex)
    zero_bonds = np.flatnonzero((forward == 0) | (backward == 0))
    if len(zero_bonds):
        raise SingularParameterError(
            f"similarity is singular: zero coupling on bond(s) {zero_bonds.tolist()}"
        )

    ratios = np.sqrt(forward / backward)
    scales = np.concatenate(([1.0 + 0j], np.cumprod(ratios)))

    symmetric = matrix.astype(complex) * scales[np.newaxis, :] / scales[:, np.newaxis]
    products = (forward * backward).real
    valid = bool(np.all(np.abs((forward * backward).imag) == 0) and np.all(products > 0))

    if valid:
        # Exact symmetric form: sign(f) * sqrt(f b) on both sides of each bond
        hop = np.sign(forward.real) * np.sqrt(products)
        symmetric = np.diag(np.diagonal(matrix)).astype(complex)
        symmetric += np.diag(hop, -1) + np.diag(hop, 1)

    return symmetric, valid
