"""
Model Service
Site layout and non-Hermitian Hamiltonian of the two-chain resonator array
"""

from dataclasses import dataclass, field, replace
from typing import List, Tuple, Iterable
import logging
import math

import numpy as np

from src.utils.errors import InputError
from src.utils.validators import validate_model_data, validate_site

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelParams:
    """Physical knobs of the array. t1 is the unit of energy."""
    t1: float
    t2: float
    delta: float
    cells_per_chain: int

    def __post_init__(self):
        is_valid, errors = validate_model_data({
            't1': self.t1,
            't2': self.t2,
            'delta': self.delta,
            'cells_per_chain': self.cells_per_chain,
        })
        if not is_valid:
            raise InputError("; ".join(errors))

    @property
    def J1(self) -> float:
        return self.t1 + self.delta

    @property
    def J1p(self) -> float:
        return self.t1 - self.delta

    @property
    def J2(self) -> float:
        return self.t2 + self.delta

    @property
    def J2p(self) -> float:
        return self.t2 - self.delta

    def with_t2(self, t2: float) -> 'ModelParams':
        return replace(self, t2=float(t2))


@dataclass(frozen=True)
class SiteLayout:
    """
    Global ordering: L1 (a1, b1, ..., aN, bN), then Q, then L2 (A1, B1, ..., AN, BN).
    Cell indices n are 1-based, global indices 0-based.
    """
    cells_per_chain: int

    @property
    def total_sites(self) -> int:
        return 4 * self.cells_per_chain + 1

    @property
    def q(self) -> int:
        return 2 * self.cells_per_chain

    def a(self, n: int) -> int:
        self._check_cell(n)
        return 2 * (n - 1)

    def b(self, n: int) -> int:
        self._check_cell(n)
        return 2 * (n - 1) + 1

    def A(self, n: int) -> int:
        self._check_cell(n)
        return self.q + 1 + 2 * (n - 1)

    def B(self, n: int) -> int:
        self._check_cell(n)
        return self.q + 2 + 2 * (n - 1)

    @property
    def b_last(self) -> int:
        return self.b(self.cells_per_chain)

    @property
    def a_first_l2(self) -> int:
        return self.A(1)

    def label(self, index: int) -> str:
        """Resonator label for a global index, e.g. 'a3', 'Q', 'B1'."""
        is_valid, error = validate_site(index, self.total_sites, 'index')
        if not is_valid:
            raise InputError(error)
        if index == self.q:
            return 'Q'
        if index < self.q:
            n, offset = divmod(index, 2)
            return f"{'ab'[offset]}{n + 1}"
        n, offset = divmod(index - self.q - 1, 2)
        return f"{'AB'[offset]}{n + 1}"

    def index(self, label: str) -> int:
        """Inverse of label()."""
        if label == 'Q':
            return self.q
        kind, n = label[0], int(label[1:])
        lookup = {'a': self.a, 'b': self.b, 'A': self.A, 'B': self.B}
        if kind not in lookup:
            raise InputError(f"Unknown resonator label '{label}'")
        return lookup[kind](n)

    def sublattice_signs(self) -> np.ndarray:
        """Chiral operator diagonal: (-1)^j over global index j."""
        return np.where(np.arange(self.total_sites) % 2 == 0, 1.0, -1.0)

    def _check_cell(self, n: int):
        if n < 1 or n > self.cells_per_chain:
            raise InputError(f"cell index {n} out of range [1, {self.cells_per_chain}]")


@dataclass(frozen=True)
class Defect:
    """Real on-site energy added to the diagonal at one resonator."""
    site: int
    strength: float


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """
    Dense matrix with matrix[target, source] = coefficient of target^dagger source.
    The stored array is read-only; every modification returns a new value.
    """
    matrix: np.ndarray
    layout: SiteLayout
    params: ModelParams
    defects: Tuple[Defect, ...] = field(default_factory=tuple)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def transpose(self) -> 'Hamiltonian':
        return replace(self, matrix=_frozen(self.matrix.T.copy()))


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


def gauge_couplings(J: float, lam: float) -> Tuple[float, float]:
    """
    Nonreciprocal pair generated by an imaginary gauge field.
    Returns (J e^lam, J e^-lam).
    """
    if not (math.isfinite(J) and math.isfinite(lam)):
        raise InputError(f"gauge_couplings needs finite inputs, got J={J}, lambda={lam}")
    return J * math.exp(lam), J * math.exp(-lam)


def gauge_from_couplings(fwd: float, bwd: float) -> Tuple[float, float]:
    """Inverse of gauge_couplings for fwd*bwd > 0: (J, lambda)."""
    if fwd * bwd <= 0:
        raise InputError(f"gauge field needs fwd*bwd > 0, got {fwd}*{bwd}")
    sign = 1.0 if fwd > 0 else -1.0
    return sign * math.sqrt(fwd * bwd), 0.5 * math.log(fwd / bwd)


def derive_couplings(params: ModelParams) -> Tuple[float, float, float, float]:
    """(J1, J1', J2, J2'). J2' is negative whenever t2 < delta."""
    return params.J1, params.J1p, params.J2, params.J2p


def chain_bonds(params: ModelParams, layout: SiteLayout) -> List[Tuple[int, int, float, float]]:
    """
    Every nearest-neighbor bond as (left, right, forward, backward) where
    forward = matrix[right, left] and backward = matrix[left, right].
    """
    J1, J1p, J2, J2p = derive_couplings(params)
    N = layout.cells_per_chain
    bonds = []

    # L1: amplification from a_n towards b_n and from b_n towards a_{n+1}
    for n in range(1, N + 1):
        bonds.append((layout.a(n), layout.b(n), J1, J1p))
        if n < N:
            bonds.append((layout.b(n), layout.a(n + 1), J2, J2p))

    # Link through Q
    bonds.append((layout.b_last, layout.q, J2, J2p))
    bonds.append((layout.q, layout.A(1), J2p, J2))

    # L2: mirrored configuration, amplification towards A1
    for n in range(1, N + 1):
        bonds.append((layout.A(n), layout.B(n), J1p, J1))
        if n < N:
            bonds.append((layout.B(n), layout.A(n + 1), J2p, J2))

    return bonds


def build_hamiltonian(params: ModelParams, defects: Iterable[Defect] = ()) -> Hamiltonian:
    """Assemble H = H_L1 + H_L2 + H_Link plus diagonal defects."""
    layout = SiteLayout(params.cells_per_chain)
    dim = layout.total_sites
    matrix = np.zeros((dim, dim), dtype=complex)

    for left, right, forward, backward in chain_bonds(params, layout):
        matrix[right, left] = forward
        matrix[left, right] = backward

    defects = tuple(defects)
    for defect in defects:
        _check_defect(defect, dim)
        matrix[defect.site, defect.site] += defect.strength

    logger.debug(
        "Built H for t1=%g t2=%g delta=%g N=%d with %d defect(s)",
        params.t1, params.t2, params.delta, params.cells_per_chain, len(defects)
    )
    return Hamiltonian(matrix=_frozen(matrix), layout=layout, params=params, defects=defects)


def apply_defect(H: Hamiltonian, defect: Defect) -> Hamiltonian:
    """Return a copy of H with diagonal[site] += strength."""
    _check_defect(defect, H.dimension)
    matrix = H.matrix.copy()
    matrix[defect.site, defect.site] += defect.strength
    return replace(H, matrix=_frozen(matrix), defects=H.defects + (defect,))


def _check_defect(defect: Defect, total_sites: int):
    is_valid, error = validate_site(defect.site, total_sites, 'defect site')
    if not is_valid:
        raise InputError(error)
    if not math.isfinite(defect.strength):
        raise InputError(f"defect strength must be finite, got {defect.strength}")
