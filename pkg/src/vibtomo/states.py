"""Composite motional (x) two-level electronic density operators.

A :class:`VibronicDensity` stores the four motional blocks
``rho_ij = <i|rho|j>`` for electronic levels i, j in {1, 2} as a complex
array of shape ``(2, 2, n_max, n_max)``; index 0 is level |1>, index 1 is
level |2>.  The assembled matrix uses the electronic-major layout
``full[i*n + a, j*n + b] = blocks[i, j, a, b]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fock
from .errors import InvalidArgumentError, InvalidStateError, TruncationUnsafeError

__all__ = [
    "VibronicDensity",
    "NumberStatistics",
    "make_cat_state",
    "make_product_state",
    "pure_vibronic",
    "reduce_motional",
    "reduce_electronic",
    "condition_on_superposition",
    "displace_state",
    "displaced_number_statistics",
    "default_n_stat",
    "support_amplitude",
    "fidelity",
]

_SUPPORT_TAIL = 1e-10


@dataclass(frozen=True)
class VibronicDensity:
    """2x2 block array of motional operators for the composite state.

    ``unit_trace`` is False for unnormalised conditioned carriers; the
    validation bounds on the trace then do not apply.
    """

    blocks: np.ndarray
    unit_trace: bool = True

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=complex)
        if b.ndim != 4 or b.shape[:2] != (2, 2) or b.shape[2] != b.shape[3]:
            raise InvalidStateError(f"blocks must have shape (2, 2, n, n), got {b.shape}")
        object.__setattr__(self, "blocks", b)

    @property
    def n_max(self) -> int:
        return self.blocks.shape[2]

    def full_matrix(self) -> np.ndarray:
        """Assemble the 2n x 2n matrix in electronic-major layout."""
        n = self.n_max
        return self.blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)

    @classmethod
    def from_full_matrix(cls, full: np.ndarray, unit_trace: bool = True) -> "VibronicDensity":
        full = np.asarray(full, dtype=complex)
        n = full.shape[0] // 2
        blocks = full.reshape(2, n, 2, n).transpose(0, 2, 1, 3)
        return cls(blocks, unit_trace=unit_trace)

    def trace(self) -> float:
        return float(np.trace(self.blocks[0, 0]).real + np.trace(self.blocks[1, 1]).real)

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10,
                 positivity_tol: float = 1e-10) -> None:
        """Check hermiticity, unit trace and positivity; raise on violation."""
        herm_err = np.abs(self.blocks - self.blocks.conj().transpose(1, 0, 3, 2)).max()
        if herm_err > herm_tol:
            raise InvalidStateError(f"hermiticity violated by {herm_err:.3e}")
        if self.unit_trace and abs(self.trace() - 1.0) > trace_tol:
            raise InvalidStateError(f"trace {self.trace():.12f} not within {trace_tol} of 1")
        lowest = np.linalg.eigvalsh(self.full_matrix())[0]
        if lowest < -positivity_tol:
            raise InvalidStateError(f"negative eigenvalue {lowest:.3e}")


@dataclass(frozen=True)
class NumberStatistics:
    """Displaced, entangled number statistics rho_ij^nn at one phase-space point.

    ``values[n, i, j]`` is the motional-diagonal element of the displaced
    block rho_ij; diagonal-in-electronic entries are real occupation-like
    numbers.
    """

    values: np.ndarray
    alpha: complex = 0.0 + 0.0j

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or v.shape[1:] != (2, 2):
            raise InvalidArgumentError(f"values must have shape (n, 2, 2), got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def n_stat(self) -> int:
        return self.values.shape[0]

    def occupations(self) -> np.ndarray:
        """Real per-n total occupation values[n,0,0] + values[n,1,1]."""
        return (self.values[:, 0, 0] + self.values[:, 1, 1]).real

    def completeness_deficit(self) -> float:
        return abs(1.0 - float(self.occupations().sum()))


def pure_vibronic(components: list[np.ndarray]) -> VibronicDensity:
    """Density |psi><psi| from the two motional components (c_1, c_2) of psi."""
    c = np.asarray(components, dtype=complex)
    if c.shape[0] != 2:
        raise InvalidArgumentError("need exactly two electronic components")
    blocks = np.einsum("ia,jb->ijab", c, c.conj())
    return VibronicDensity(blocks)


def make_cat_state(beta: complex, n_max: int, strict: bool = True) -> VibronicDensity:
    """Entangled superposition (|beta>|2> - |-beta>|1>)/sqrt(2) as a density."""
    plus = fock.coherent_state(beta, n_max, strict=strict)
    minus = fock.coherent_state(-beta, n_max, strict=strict)
    return pure_vibronic([-minus / np.sqrt(2.0), plus / np.sqrt(2.0)])


def make_product_state(rho: np.ndarray, sigma: np.ndarray) -> VibronicDensity:
    """Product state with blocks sigma_ij * rho."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (2, 2):
        raise InvalidStateError("electronic density must be 2x2")
    _check_density(rho, "motional density")
    _check_density(sigma, "electronic density")
    return VibronicDensity(np.einsum("ij,ab->ijab", sigma, rho))


def _check_density(mat: np.ndarray, what: str) -> None:
    if np.abs(mat - mat.conj().T).max() > 1e-12:
        raise InvalidStateError(f"{what} is not hermitian")
    if abs(np.trace(mat).real - 1.0) > 1e-10:
        raise InvalidStateError(f"{what} trace differs from 1")
    if np.linalg.eigvalsh(mat)[0] < -1e-10:
        raise InvalidStateError(f"{what} has a negative eigenvalue")


def reduce_motional(state: VibronicDensity) -> np.ndarray:
    """Trace out the electronic system: rho_11 + rho_22."""
    return state.blocks[0, 0] + state.blocks[1, 1]


def reduce_electronic(state: VibronicDensity) -> np.ndarray:
    """Trace out the motion: sigma_ij = Tr rho_ij."""
    return np.trace(state.blocks, axis1=2, axis2=3)


def condition_on_superposition(state: VibronicDensity, psi: np.ndarray) -> np.ndarray:
    """Unnormalised motional density conditioned on detecting |psi>.

    The trace of the result is the detection probability; normalisation is
    left to the caller.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise InvalidArgumentError("conditioning vector must have two components")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise InvalidArgumentError("conditioning vector must be normalised")
    return np.einsum("i,j,ijab->ab", psi.conj(), psi, state.blocks)


def support_amplitude(state: VibronicDensity) -> float:
    """Effective coherent amplitude of the motional support.

    Inverts the guard-band rule from the smallest occupation index that
    captures all but 1e-10 of the motional mass.
    """
    occ = np.diag(reduce_motional(state)).real
    total = occ.sum()
    if total <= 0:
        return 0.0
    tail = np.cumsum(occ[::-1])[::-1] / total
    above = np.nonzero(tail > _SUPPORT_TAIL)[0]
    n_eff = int(above[-1]) + 1 if above.size else 1
    return max(0.0, np.sqrt(n_eff) - 3.0)


def displace_state(state: VibronicDensity, alpha: complex, strict: bool = True) -> VibronicDensity:
    """Coherently displaced density with blocks D+(alpha) rho_ij D(alpha)."""
    if strict:
        fock.check_guard(support_amplitude(state) + abs(alpha), state.n_max, "state displacement")
    d = fock.displacement_operator(alpha, state.n_max, strict=False)
    moved = np.einsum("ca,ijcd,db->ijab", d.conj(), state.blocks, d, optimize=True)
    return VibronicDensity(moved, unit_trace=state.unit_trace)


def displaced_number_statistics(state: VibronicDensity, alpha: complex,
                                n_stat: int | None = None,
                                strict: bool = True) -> NumberStatistics:
    """Diagonal blocks <n| D+(alpha) rho_ij D(alpha) |n> for n < n_stat."""
    if n_stat is None:
        n_stat = state.n_max
    if not 1 <= n_stat <= state.n_max:
        raise InvalidArgumentError(f"n_stat must lie in [1, {state.n_max}]")
    if strict:
        fock.check_guard(support_amplitude(state) + abs(alpha), state.n_max, "state displacement")
    d = fock.displacement_operator(alpha, state.n_max, strict=False)
    # diag(D+ B D) per block without forming the displaced blocks densely
    bd = np.einsum("ijab,bn->ijan", state.blocks, d, optimize=True)
    vals = np.einsum("an,ijan->nij", d.conj(), bd, optimize=True)
    return NumberStatistics(vals[:n_stat], alpha=alpha)


def default_n_stat(state: VibronicDensity, alpha: complex, tail_tol: float = 1e-6,
                   strict: bool = True) -> int:
    """Smallest statistics length whose ignored occupation tail is < tail_tol."""
    stats = displaced_number_statistics(state, alpha, strict=strict)
    occ = stats.occupations()
    tail = np.cumsum(occ[::-1])[::-1]
    keep = np.nonzero(tail >= tail_tol)[0]
    return int(keep[-1]) + 1 if keep.size else 1


def fidelity(a: VibronicDensity, b: VibronicDensity) -> float:
    """Uhlmann fidelity of two composite states.

    Eigenvalues below dim * eps relative to the largest are rounding noise
    and are zeroed before the square roots to keep pure-state fidelities
    from drifting above 1.
    """

    def _clipped(evals: np.ndarray) -> np.ndarray:
        floor = evals.size * np.finfo(float).eps * max(evals.max(), 0.0)
        return np.where(evals > floor, evals, 0.0)

    am = a.full_matrix()
    bm = b.full_matrix()
    w, v = np.linalg.eigh(am)
    sqrt_a = (v * np.sqrt(_clipped(w))) @ v.conj().T
    inner = sqrt_a @ bm @ sqrt_a
    evals = np.linalg.eigvalsh((inner + inner.conj().T) / 2.0)
    return float(min(np.sqrt(_clipped(evals)).sum() ** 2, 1.0))
