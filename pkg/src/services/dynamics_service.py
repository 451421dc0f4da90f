"""
Dynamics Service
Non-unitary time evolution psi(t) = exp(-iHt) psi(0), population maps and pulse diagnostics
"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.signal import find_peaks

from src.services.model_service import (
    Defect, Hamiltonian, ModelParams, SiteLayout, build_hamiltonian
)
from src.services.spectra_service import eig
from src.utils.errors import (
    InputError, NormOverflowError, PropagationError, SolverError
)
from src.utils.validators import (
    EXCITATION_PRESETS, validate_choice, validate_increasing_grid, validate_site
)

logger = logging.getLogger(__name__)

SPECTRAL_CONDITION_LIMIT = 1e8
INTEGRATOR_RTOL = 1e-9
INTEGRATOR_ATOL = 1e-12
# Largest ||H|| * dt between renormalizations of the integrated state
CHECKPOINT_GROWTH = 50.0
DEFAULT_PROMINENCE = 0.05
DEFAULT_WINDOW = (5.0, 30.0)
METHODS = ('auto', 'spectral', 'integrator')


@dataclass(frozen=True)
class ExcitationSpec:
    """Initial state as (site, amplitude) entries, stored with unit 2-norm."""
    entries: Tuple[Tuple[int, complex], ...]
    total_sites: int

    def vector(self) -> np.ndarray:
        state = np.zeros(self.total_sites, dtype=complex)
        for site, amplitude in self.entries:
            state[site] += amplitude
        return state


def make_excitation(entries: Iterable[Tuple[int, complex]], total_sites: int) -> ExcitationSpec:
    """Validate sites, reject the zero state and normalize."""
    entries = [(site, complex(amplitude)) for site, amplitude in entries]
    if not entries:
        raise InputError("excitation needs at least one entry")

    for site, amplitude in entries:
        is_valid, error = validate_site(site, total_sites, 'excitation site')
        if not is_valid:
            raise InputError(error)
        if not (math.isfinite(amplitude.real) and math.isfinite(amplitude.imag)):
            raise InputError(f"excitation amplitude at site {site} must be finite")

    raw = ExcitationSpec(tuple(entries), total_sites).vector()
    norm = np.linalg.norm(raw)
    if norm == 0:
        raise InputError("excitation needs at least one nonzero amplitude")

    normalized = tuple(
        (int(site), complex(raw[site] / norm)) for site in np.flatnonzero(raw)
    )
    return ExcitationSpec(normalized, total_sites)


def excitation_sites(name: str, layout: SiteLayout) -> List[int]:
    """Sites touched by a named preset."""
    is_valid, error = validate_choice(name, EXCITATION_PRESETS, 'excitation preset')
    if not is_valid:
        raise InputError(error)

    if name == 'interface':
        return [layout.q]
    if name == 'first':
        return [0]
    if name == 'both_ends':
        return [0, layout.total_sites - 1]
    return list(range(layout.total_sites))


def excitation_from_preset(name: str, layout: SiteLayout) -> ExcitationSpec:
    """interface (Q), first (a1), both_ends (a1 and B_N), uniform (all sites)."""
    sites = excitation_sites(name, layout)
    return make_excitation([(site, 1.0) for site in sites], layout.total_sites)


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    """
    Row k holds the state at times[k]: populations are normalized per slice,
    states are the unit-norm amplitudes and the raw amplitude is
    states[k] * exp(log_norms[k]).
    """
    times: np.ndarray
    populations: np.ndarray
    states: np.ndarray
    log_norms: np.ndarray
    method: str

    @property
    def norms(self) -> np.ndarray:
        with np.errstate(over='ignore'):
            return np.exp(self.log_norms)

    def raw_amplitudes(self) -> np.ndarray:
        return self.states * self.norms[:, np.newaxis]


def _check_times(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    is_valid, error = validate_increasing_grid(list(times), 'times')
    if not is_valid:
        raise InputError(error)
    if times[0] != 0:
        raise InputError(f"times must start at 0, got {times[0]}")
    return times


def _trace(times, states, log_norms, method) -> EvolutionTrace:
    weights = np.abs(states) ** 2
    populations = weights / weights.sum(axis=1, keepdims=True)
    return EvolutionTrace(
        times=times,
        populations=populations,
        states=states,
        log_norms=np.asarray(log_norms, dtype=float),
        method=method,
    )


def _spectral(values: np.ndarray, vectors: np.ndarray, psi0: np.ndarray,
              times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """V exp(-i Lambda t) V^-1 psi0 with the largest exponent factored out of every slice."""
    try:
        coefficients = np.linalg.solve(vectors, psi0)
    except np.linalg.LinAlgError as e:
        raise PropagationError(f"eigenvector matrix is singular: {e}") from e
    active = np.abs(coefficients) > 0

    states = np.empty((len(times), len(psi0)), dtype=complex)
    log_norms = np.empty(len(times))
    for k, t in enumerate(times):
        exponents = -1j * values * t
        shift = np.max(exponents.real[active]) if np.any(active) else 0.0
        state = vectors @ (np.exp(exponents - shift) * coefficients)
        norm = np.linalg.norm(state)
        if norm == 0 or not np.isfinite(norm):
            raise NormOverflowError(f"spectral propagator lost the state at t={t:g}")
        states[k] = state / norm
        log_norms[k] = shift + math.log(norm)

    return states, log_norms


def _integrate(matrix: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    DOP853 between consecutive samples, renormalizing at every sample and
    every CHECKPOINT_GROWTH / ||H|| inside long gaps while tracking the log-norm.
    """
    scale = np.linalg.norm(matrix, 2)
    span = CHECKPOINT_GROWTH / scale if scale > 0 else math.inf

    def rhs(t, y):
        return -1j * (matrix @ y)

    norm0 = np.linalg.norm(psi0)
    state = psi0 / norm0
    log_norm = math.log(norm0)

    states = np.empty((len(times), len(psi0)), dtype=complex)
    log_norms = np.empty(len(times))
    states[0], log_norms[0] = state, log_norm

    for k in range(1, len(times)):
        t = times[k - 1]
        while t < times[k]:
            t_next = min(times[k], t + span)
            result = solve_ivp(
                rhs, (t, t_next), state, method='DOP853',
                rtol=INTEGRATOR_RTOL, atol=INTEGRATOR_ATOL
            )
            if not result.success:
                raise PropagationError(f"integrator failed on [{t:g}, {t_next:g}]: {result.message}")

            end = result.y[:, -1]
            norm = np.linalg.norm(end)
            if norm == 0 or not np.all(np.isfinite(end)):
                raise NormOverflowError(
                    f"raw amplitudes overflowed on [{t:g}, {t_next:g}]; "
                    f"lower the checkpoint span (||H|| dt = {CHECKPOINT_GROWTH:g})"
                )
            state = end / norm
            log_norm += math.log(norm)
            t = t_next

        states[k], log_norms[k] = state, log_norm

    return states, log_norms


def evolve_state(H: Hamiltonian, psi0: np.ndarray, times: Sequence[float], method: str = 'auto') -> EvolutionTrace:
    """
    Evolve an arbitrary nonzero vector (not normalized first), so that
    log_norms[0] = log ||psi0||. propagate() is the normalized entry point.
    """
    if method not in METHODS:
        raise InputError(f"method must be one of: {', '.join(METHODS)}")
    times = _check_times(times)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (H.dimension,):
        raise InputError(f"initial state must have {H.dimension} entries, got shape {psi0.shape}")
    if not np.any(psi0):
        raise InputError("initial state must be nonzero")

    matrix = np.asarray(H.matrix)

    if method in ('auto', 'spectral'):
        try:
            spec = eig(H)
        except SolverError as e:
            if method == 'spectral':
                raise PropagationError(f"spectral propagator unavailable: {e}") from e
            logger.warning("Eigensolver failed (%s); falling back to the integrator", e)
        else:
            if spec.eigvec_condition < SPECTRAL_CONDITION_LIMIT or method == 'spectral':
                states, log_norms = _spectral(spec.eigenvalues, spec.right_eigenvectors, psi0, times)
                logger.debug("Spectral propagation, cond(V)=%.3e", spec.eigvec_condition)
                return _trace(times, states, log_norms, 'spectral')
            logger.warning(
                "cond(V)=%.3e >= %.0e; using the adaptive integrator",
                spec.eigvec_condition, SPECTRAL_CONDITION_LIMIT
            )

    states, log_norms = _integrate(matrix, psi0, times)

    return _trace(times, states, log_norms, 'integrator')


def propagate(H: Hamiltonian, psi0: ExcitationSpec, times: Sequence[float], method: str = 'auto') -> EvolutionTrace:
    """Evolve a normalized excitation; norms[0] = 1."""
    if psi0.total_sites != H.dimension:
        raise InputError(
            f"excitation is defined on {psi0.total_sites} sites, Hamiltonian has {H.dimension}"
        )
    return evolve_state(H, psi0.vector(), times, method)


def _window_mask(trace: EvolutionTrace, window: Tuple[float, float]) -> np.ndarray:
    start, stop = window
    if stop < start:
        raise InputError(f"window must satisfy start <= stop, got [{start}, {stop}]")
    if start < trace.times[0] or stop > trace.times[-1]:
        raise InputError(
            f"window [{start}, {stop}] outside trace times [{trace.times[0]}, {trace.times[-1]}]"
        )
    mask = (trace.times >= start) & (trace.times <= stop)
    if not np.any(mask):
        raise InputError(f"window [{start}, {stop}] contains no samples")
    return mask


def interface_accumulation(trace: EvolutionTrace, layout: SiteLayout,
                           window: Tuple[float, float] = DEFAULT_WINDOW) -> float:
    """Average normalized population at Q over the samples inside the window."""
    mask = _window_mask(trace, window)
    return float(np.mean(trace.populations[mask, layout.q]))


def pulse_times(trace: EvolutionTrace, site: int, prominence: float = DEFAULT_PROMINENCE) -> List[float]:
    """Times of population maxima at a site with at least the given prominence."""
    is_valid, error = validate_site(site, trace.populations.shape[1], 'site')
    if not is_valid:
        raise InputError(error)
    peaks, _ = find_peaks(trace.populations[:, site], prominence=prominence)
    return [float(trace.times[k]) for k in peaks]


def population_correlation(trace: EvolutionTrace, site_a: int, site_b: int,
                           window: Tuple[float, float] = DEFAULT_WINDOW) -> float:
    """Pearson correlation of two population series over the window."""
    total = trace.populations.shape[1]
    for site, name in ((site_a, 'site_a'), (site_b, 'site_b')):
        is_valid, error = validate_site(site, total, name)
        if not is_valid:
            raise InputError(error)

    mask = _window_mask(trace, window)
    first = trace.populations[mask, site_a]
    second = trace.populations[mask, site_b]
    if np.std(first) == 0 or np.std(second) == 0:
        raise InputError("correlation undefined for a constant population series")
    return float(np.corrcoef(first, second)[0, 1])


def defect_robustness_run(params: ModelParams, defect: Defect, excitation: ExcitationSpec,
                          times: Sequence[float], method: str = 'auto') -> EvolutionTrace:
    """Build H with the defect and propagate the excitation."""
    H = build_hamiltonian(params, [defect])
    logger.info("Defect %g at site %d", defect.strength, defect.site)
    return propagate(H, excitation, times, method)
