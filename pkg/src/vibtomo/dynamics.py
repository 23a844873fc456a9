"""Nonlinear Jaynes-Cummings dynamics of the driven weak transition.

The interaction couples |1,n> and |2,n> with the Fock-dependent Rabi
frequency Omega_n = |Omega| L_n(eta^2) exp(-eta^2/2).  Everything here is
block diagonal in the occupation number, which is a constant of motion
(back-action evasion).  hbar = 1 throughout; times carry the inverse unit
of the Rabi magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import InvalidArgumentError
from .states import NumberStatistics, VibronicDensity

__all__ = [
    "DriveConfig",
    "laguerre_sequence",
    "coupling_diagonal",
    "coupling_diagonals",
    "rabi_spectrum",
    "build_hamiltonian",
    "evolve_oracle",
    "reduced_after_first_cycle",
    "cycle_product",
    "success_probability",
]


@dataclass(frozen=True)
class DriveConfig:
    """Laser drive on the weak transition: Omega = rabi_magnitude * e^(i*phase)."""

    rabi_magnitude: float
    phase: float = 0.0
    lamb_dicke: float = 0.1

    def __post_init__(self):
        if self.rabi_magnitude <= 0:
            raise InvalidArgumentError("rabi_magnitude must be positive")
        if self.lamb_dicke < 0:
            raise InvalidArgumentError("lamb_dicke must be non-negative")
        if not -math.pi < self.phase <= math.pi + 1e-12:
            raise InvalidArgumentError("phase must lie in (-pi, pi]")


def laguerre_sequence(count: int, x: float) -> np.ndarray:
    """L_0(x) .. L_{count-1}(x) by the stable three-term recurrence."""
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    out = np.empty(count)
    out[0] = 1.0
    if count == 1:
        return out
    out[1] = 1.0 - x
    for n in range(1, count - 1):
        out[n + 1] = ((2 * n + 1 - x) * out[n] - n * out[n - 1]) / (n + 1)
    return out


@lru_cache(maxsize=256)
def _laguerre_cached(count: int, x: float) -> np.ndarray:
    out = laguerre_sequence(count, x)
    out.flags.writeable = False
    return out


def coupling_diagonal(eta: float, n: int) -> float:
    """Vibronic coupling strength f(n) = exp(-eta^2/2) L_n(eta^2)."""
    if eta < 0:
        raise InvalidArgumentError("eta must be non-negative")
    return float(math.exp(-(eta**2) / 2.0) * _laguerre_cached(n + 1, eta**2)[-1])


def coupling_diagonals(eta: float, count: int) -> np.ndarray:
    if eta < 0:
        raise InvalidArgumentError("eta must be non-negative")
    return math.exp(-(eta**2) / 2.0) * _laguerre_cached(count, eta**2)


def rabi_spectrum(drive: DriveConfig, count: int) -> np.ndarray:
    """Nonlinear Rabi frequencies Omega_n; entries can be negative or ~0."""
    return drive.rabi_magnitude * coupling_diagonals(drive.lamb_dicke, count)


def build_hamiltonian(drive: DriveConfig, n_max: int) -> np.ndarray:
    """Interaction Hamiltonian (electronic-major 2n x 2n, hbar = 1).

    H = (Omega/2) f(n) |1><2| + h.c., so each occupation n carries an
    isolated two-level block with splitting +-Omega_n/2.
    """
    f = coupling_diagonals(drive.lamb_dicke, n_max)
    omega = drive.rabi_magnitude * np.exp(1j * drive.phase)
    h = np.zeros((2 * n_max, 2 * n_max), dtype=complex)
    coup = 0.5 * omega * f
    h[np.arange(n_max), n_max + np.arange(n_max)] = coup
    h[n_max + np.arange(n_max), np.arange(n_max)] = np.conj(coup)
    return h


def evolve_oracle(state: VibronicDensity, drive: DriveConfig, tau: float) -> VibronicDensity:
    """Brute-force propagation U rho U+ with U = expm(-i H tau).

    Dense matrix exponential; reference implementation used to validate the
    closed-form cycle formulas.
    """
    h = build_hamiltonian(drive, state.n_max)
    u = expm(-1j * tau * h)
    full = u @ state.full_matrix() @ u.conj().T
    return VibronicDensity.from_full_matrix(full, unit_trace=state.unit_trace)


def reduced_after_first_cycle(stats: NumberStatistics, drive: DriveConfig,
                              tau1: float) -> np.ndarray:
    """Motional number populations after one interaction and a no-fluorescence probe.

    rho_nn = v22 cos^2(O_n t/2) + v11 sin^2(O_n t/2) + Im[v12 e^(-i phi)] sin(O_n t)
    with O_n the signed nonlinear Rabi frequency.
    """
    omega = rabi_spectrum(drive, stats.n_stat)
    half = 0.5 * omega * tau1
    v11 = stats.values[:, 0, 0].real
    v22 = stats.values[:, 1, 1].real
    cross = (stats.values[:, 0, 1] * np.exp(-1j * drive.phase)).imag
    return v22 * np.cos(half) ** 2 + v11 * np.sin(half) ** 2 + cross * np.sin(omega * tau1)


def cycle_product(reduced_tau1: np.ndarray, drive: DriveConfig,
                  taus: np.ndarray) -> np.ndarray:
    """Apply the no-fluorescence cosine filters of cycles 2..k."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if taus.size == 0:
        raise InvalidArgumentError("need at least one interaction time beyond tau1")
    omega = rabi_spectrum(drive, len(reduced_tau1))
    filt = np.prod(np.cos(0.5 * np.outer(taus, omega)) ** 2, axis=0)
    return reduced_tau1 * filt


def success_probability(filtered: np.ndarray) -> float:
    """Probability of the all-no-fluorescence record: sum over n."""
    return float(np.sum(filtered))
