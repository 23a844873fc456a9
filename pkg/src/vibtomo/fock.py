"""Truncated Fock-space linear algebra.

States are complex vectors of length ``n_max`` indexed by the occupation
number, operators are dense ``n_max x n_max`` complex matrices.  The
displaced-parity kernel built here carries no 2/pi prefactor; that
convention lives in :mod:`vibtomo.wigner`.

Truncation safety follows a guard-band rule: an amplitude ``a`` needs
``(|a| + 3)**2`` Fock levels to keep Poisson tails below ~1e-10.  Operations
that promise truncation-safe results raise :class:`TruncationUnsafeError`
when the rule is violated; passing ``strict=False`` skips the check for
consistency studies that deliberately work inside a too-small space.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import InvalidDimensionError, TruncationUnsafeError

__all__ = [
    "alpha_guard",
    "required_dim",
    "check_guard",
    "fock_state",
    "annihilation",
    "creation",
    "number_operator",
    "coherent_state",
    "displacement_operator",
    "displacement_matrix_element",
    "parity_operator",
    "displaced_parity",
]

DEFAULT_N_MAX = 64


def _check_dim(n_max: int) -> int:
    if int(n_max) != n_max or n_max < 2:
        raise InvalidDimensionError(f"truncation dimension must be an integer >= 2, got {n_max}")
    return int(n_max)


def alpha_guard(n_max: int) -> float:
    """Largest amplitude that is truncation-safe in an ``n_max`` space."""
    return math.sqrt(_check_dim(n_max)) - 3.0


def required_dim(amplitude: float) -> int:
    """Smallest truncation dimension that is safe for the given amplitude."""
    return max(2, math.ceil((abs(amplitude) + 3.0) ** 2))


def check_guard(amplitude: float, n_max: int, what: str = "amplitude", strict: bool = True) -> None:
    """Raise ``TruncationUnsafeError`` if ``amplitude`` violates the guard band."""
    if not strict:
        return
    if (abs(amplitude) + 3.0) ** 2 > n_max + 1e-9:
        raise TruncationUnsafeError(
            f"{what} |a|={abs(amplitude):.4g} needs dimension {required_dim(amplitude)}"
            f" > n_max={n_max}; enlarge the space or pass strict=False"
        )


def fock_state(n: int, n_max: int) -> np.ndarray:
    """Number state |n> as a unit vector."""
    n_max = _check_dim(n_max)
    if not 0 <= n < n_max:
        raise InvalidDimensionError(f"Fock index {n} outside [0, {n_max})")
    vec = np.zeros(n_max, dtype=complex)
    vec[n] = 1.0
    return vec


def annihilation(n_max: int) -> np.ndarray:
    """Ladder operator with <n-1|a|n> = sqrt(n)."""
    n_max = _check_dim(n_max)
    return np.diag(np.sqrt(np.arange(1, n_max, dtype=float)), k=1).astype(complex)


def creation(n_max: int) -> np.ndarray:
    return annihilation(n_max).conj().T


def number_operator(n_max: int) -> np.ndarray:
    n_max = _check_dim(n_max)
    return np.diag(np.arange(n_max, dtype=float)).astype(complex)


def coherent_state(gamma: complex, n_max: int, strict: bool = True) -> np.ndarray:
    """Coherent state |gamma> with amplitudes exp(-|g|^2/2) g^n / sqrt(n!).

    Amplitude magnitudes are accumulated in log space so that large photon
    numbers do not overflow the factorial.
    """
    n_max = _check_dim(n_max)
    check_guard(gamma, n_max, "coherent amplitude", strict)
    if gamma == 0:
        return fock_state(0, n_max)
    n = np.arange(n_max)
    log_mag = -0.5 * abs(gamma) ** 2 + n * math.log(abs(gamma)) - 0.5 * gammaln(n + 1.0)
    phase = n * np.angle(gamma)
    return np.exp(log_mag + 1j * phase)


@lru_cache(maxsize=8)
def _displacement_eigensystem(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the hermitian quadrature i(a+ - a), cached per dim."""
    a = annihilation(n_max)
    evals, evecs = np.linalg.eigh(1j * (a.conj().T - a))
    evals.flags.writeable = False
    evecs.flags.writeable = False
    return evals, evecs


def displacement_operator(alpha: complex, n_max: int, strict: bool = True) -> np.ndarray:
    """Unitary displacement D(alpha) on the truncated space.

    The operator is the exponential of the truncated skew-hermitian
    generator ``alpha a+ - conj(alpha) a``, evaluated spectrally:
    ``D(r e^(i th)) = e^(i th n) exp(-i r X) e^(-i th n)`` with the hermitian
    quadrature ``X = i(a+ - a)``, whose eigendecomposition is cached per
    dimension.  This keeps the truncated operator exactly unitary; the
    analytic matrix elements (:func:`displacement_matrix_element`) are
    reserved as a test oracle.
    """
    n_max = _check_dim(n_max)
    if alpha == 0:
        return np.eye(n_max, dtype=complex)
    check_guard(alpha, n_max, "displacement", strict)
    evals, evecs = _displacement_eigensystem(n_max)
    d = (evecs * np.exp(-1j * abs(alpha) * evals)) @ evecs.conj().T
    rot = np.exp(1j * np.angle(alpha) * np.arange(n_max))
    return (rot[:, np.newaxis] * d) * rot.conj()[np.newaxis, :]


def _laguerre_assoc(n: int, k: int, x: float) -> float:
    """Associated Laguerre L_n^(k)(x) by the stable three-term recurrence."""
    if n == 0:
        return 1.0
    prev = 1.0
    cur = 1.0 + k - x
    for j in range(1, n):
        prev, cur = cur, ((2 * j + k + 1 - x) * cur - (j + k) * prev) / (j + 1)
    return cur


def displacement_matrix_element(m: int, n: int, alpha: complex) -> complex:
    """Infinite-dimensional <m|D(alpha)|n> via the Laguerre closed form.

    Test oracle only; magnitudes are combined in log space to stay finite
    for indices far beyond the factorial overflow point.
    """
    if m < 0 or n < 0:
        raise InvalidDimensionError("Fock indices must be non-negative")
    if alpha == 0:
        return 1.0 + 0.0j if m == n else 0.0j
    lo, hi = min(m, n), max(m, n)
    k = hi - lo
    x = abs(alpha) ** 2
    lag = _laguerre_assoc(lo, k, x)
    if lag == 0.0:
        return 0.0j
    log_mag = (
        0.5 * (gammaln(lo + 1.0) - gammaln(hi + 1.0))
        + k * math.log(abs(alpha))
        - 0.5 * x
        + math.log(abs(lag))
    )
    # <m|D|n> = sqrt(n!/m!) alpha^(m-n) e^(-x/2) L_n^(m-n)(x) for m >= n,
    # and the adjoint relation supplies m < n with (-conj(alpha))^(n-m).
    base = alpha if m >= n else -np.conj(alpha)
    phase = k * np.angle(base)
    sign = math.copysign(1.0, lag)
    return sign * math.exp(log_mag) * np.exp(1j * phase)


def parity_operator(n_max: int) -> np.ndarray:
    """Diagonal parity (-1)^n."""
    n_max = _check_dim(n_max)
    return np.diag((-1.0) ** np.arange(n_max)).astype(complex)


def displaced_parity(alpha: complex, n_max: int, strict: bool = True) -> np.ndarray:
    """Hermitian unitary kernel D(alpha) (-1)^n D+(alpha), prefactor-free."""
    n_max = _check_dim(n_max)
    if alpha == 0:
        return parity_operator(n_max)
    d = displacement_operator(alpha, n_max, strict=strict)
    signs = (-1.0) ** np.arange(n_max)
    return (d * signs[np.newaxis, :]) @ d.conj().T
