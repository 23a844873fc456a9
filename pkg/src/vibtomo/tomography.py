"""Probe-cycle schedules, Fock filtering and statistics inversion.

A schedule fixes the first interaction time (one of three variants), the
laser phase and the integer multipliers p_q that set the later interaction
times tau_q = 2 pi p_q / |Omega_m|.  Repeated no-fluorescence outcomes then
suppress every occupation n != m by the accumulated cosine factor S_n,
mapping the probability of the full record onto the target population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import DriveConfig, cycle_product, rabi_spectrum, reduced_after_first_cycle
from .errors import InvalidArgumentError, RabiNullError, ScheduleInfeasibleError
from .states import NumberStatistics, VibronicDensity, displaced_number_statistics
from .wigner import TWO_OVER_PI, WignerMatrixSample

__all__ = [
    "VARIANTS",
    "CycleSchedule",
    "EstimationRecord",
    "suppression_factors",
    "build_schedule",
    "schedule_for_variant",
    "exact_success_probability",
    "leakage_bound",
    "invert_statistics",
    "assemble_wigner",
]

VARIANTS = ("tau1_zero", "tau1_pi", "tau1_half_pi")

# the four (variant, phase) combinations measured per (alpha, m)
MEASUREMENT_SETTINGS = (
    ("tau1_zero", 0.0),
    ("tau1_pi", 0.0),
    ("tau1_half_pi", 0.0),
    ("tau1_half_pi", -math.pi / 2.0),
)

RABI_NULL_THRESHOLD = 1e-6
DEFAULT_K_CAP = 60
DEFAULT_P_MAX = 200


@dataclass(frozen=True)
class CycleSchedule:
    """Interaction-probe cycle plan targeting one Fock index.

    ``multipliers`` are the integers p_2..p_k; ``taus`` the matching
    interaction times 2 pi p / |Omega_m|; ``k`` counts all cycles including
    the first.  ``achieved_leakage`` is the worst surviving suppression
    factor max_{n != m} S_n reported by the builder.
    """

    target_m: int
    variant: str
    phase: float
    multipliers: tuple[int, ...]
    tau1: float
    taus: tuple[float, ...]
    achieved_leakage: float
    feasible: bool

    @property
    def k(self) -> int:
        return 1 + len(self.multipliers)


def _target_omega(drive: DriveConfig, target_m: int, n_stat: int) -> tuple[np.ndarray, float]:
    omega = rabi_spectrum(drive, n_stat)
    if not 0 <= target_m < n_stat:
        raise InvalidArgumentError(f"target_m={target_m} outside [0, {n_stat})")
    om_m = omega[target_m]
    if abs(om_m) / drive.rabi_magnitude < RABI_NULL_THRESHOLD * math.exp(-drive.lamb_dicke**2 / 2):
        raise RabiNullError(
            f"Rabi spectrum has a Laguerre null at m={target_m}; cycle times diverge"
        )
    return omega, om_m


def _tau1_for(variant: str, om_m: float) -> float:
    if variant == "tau1_zero":
        return 0.0
    if variant == "tau1_pi":
        return math.pi / abs(om_m)
    if variant == "tau1_half_pi":
        return math.pi / (2.0 * abs(om_m))
    raise InvalidArgumentError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def suppression_factors(drive: DriveConfig, schedule: CycleSchedule, n_stat: int) -> np.ndarray:
    """Independent recomputation of S_n = prod_q cos^2(pi p_q Omega_n / Omega_m)."""
    omega, om_m = _target_omega(drive, schedule.target_m, n_stat)
    ratios = omega / om_m
    s = np.ones(n_stat)
    for p in schedule.multipliers:
        s *= np.cos(math.pi * p * ratios) ** 2
    return s


def build_schedule(drive: DriveConfig, target_m: int, n_stat: int,
                   leakage_budget: float = 1e-3, p_max: int = DEFAULT_P_MAX,
                   k_cap: int = DEFAULT_K_CAP, variant: str = "tau1_zero",
                   phase: float = 0.0, strict: bool = True) -> CycleSchedule:
    """Greedy minimax construction of the cycle multipliers.

    Each added cycle picks the p in [1, p_max] that minimises the worst
    surviving S_n over n != m (smallest p on ties), stopping once the
    budget is met or k_cap cycles are spent.  With ``strict`` a miss raises
    :class:`ScheduleInfeasibleError`; otherwise the best schedule found is
    returned with ``feasible=False``.
    """
    if not 0.0 < leakage_budget < 1.0:
        raise InvalidArgumentError("leakage_budget must lie in (0, 1)")
    omega, om_m = _target_omega(drive, target_m, n_stat)
    tau1 = _tau1_for(variant, om_m)
    ratios = omega / om_m
    others = np.arange(n_stat) != target_m

    multipliers: list[int] = []
    if others.any():
        candidates = np.cos(math.pi * np.outer(np.arange(1, p_max + 1), ratios[others])) ** 2
        surviving = np.ones(others.sum())
        leakage = 1.0
        while leakage > leakage_budget and len(multipliers) < k_cap - 1:
            worst = (candidates * surviving[np.newaxis, :]).max(axis=1)
            best = int(np.argmin(worst))
            multipliers.append(best + 1)
            surviving = surviving * candidates[best]
            leakage = float(surviving.max())
    else:
        leakage = 0.0

    feasible = leakage <= leakage_budget
    if strict and not feasible:
        raise ScheduleInfeasibleError(
            f"m={target_m}: best leakage {leakage:.3e} > budget {leakage_budget:.3e}"
            f" within k <= {k_cap} (p <= {p_max})"
        )
    taus = tuple(2.0 * math.pi * p / abs(om_m) for p in multipliers)
    return CycleSchedule(target_m, variant, phase, tuple(multipliers), tau1, taus,
                         achieved_leakage=leakage, feasible=feasible)


def schedule_for_variant(schedule: CycleSchedule, drive: DriveConfig, variant: str,
                         phase: float) -> CycleSchedule:
    """Same multipliers, different first interaction time and laser phase."""
    om_m = rabi_spectrum(drive, schedule.target_m + 1)[schedule.target_m]
    return replace(schedule, variant=variant, phase=phase, tau1=_tau1_for(variant, om_m))


def exact_success_probability(state: VibronicDensity, alpha: complex, drive: DriveConfig,
                              schedule: CycleSchedule,
                              stats: NumberStatistics | None = None,
                              strict: bool = True) -> float:
    """Probability of the all-no-fluorescence record, by the closed-form chain."""
    if stats is None:
        stats = displaced_number_statistics(state, alpha, strict=strict)
    drive_var = replace(drive, phase=schedule.phase)
    reduced = reduced_after_first_cycle(stats, drive_var, schedule.tau1)
    if schedule.multipliers:
        reduced = cycle_product(reduced, drive_var, np.array(schedule.taus))
    return float(reduced.sum())


def leakage_bound(stats: NumberStatistics, drive: DriveConfig,
                  schedule: CycleSchedule) -> float:
    """Systematic error bound sum_{n != m} S_n rho_nn^(red)(tau1) of the record."""
    drive_var = replace(drive, phase=schedule.phase)
    reduced = reduced_after_first_cycle(stats, drive_var, schedule.tau1)
    s = suppression_factors(drive, schedule, stats.n_stat)
    mask = np.arange(stats.n_stat) != schedule.target_m
    return float(np.abs(s[mask] * reduced[mask]).sum())


def invert_statistics(p_zero: float, p_pi: float, p_half_phi0: float,
                      p_half_phineg: float) -> tuple[float, float, float, float]:
    """Recover (rho11, rho22, re12, im12) from the four record probabilities.

    Statistical noise can push inputs slightly outside [0, 1]; values are
    used as given rather than clipped so the estimator stays unbiased.
    """
    mean_diag = 0.5 * (p_zero + p_pi)
    return p_pi, p_zero, p_half_phineg - mean_diag, p_half_phi0 - mean_diag


@dataclass(frozen=True)
class EstimationRecord:
    """Estimated displaced statistics for one (alpha, m), with standard errors."""

    alpha: complex
    m: int
    rho11: float
    rho22: float
    re_rho12: float
    im_rho12: float
    stderr_rho11: float
    stderr_rho22: float
    stderr_re_rho12: float
    stderr_im_rho12: float
    trials: int
    leakage_bound: float = 0.0


def assemble_wigner(records: list[EstimationRecord]) -> WignerMatrixSample:
    """Alternating-sign series over the per-m records at one phase-space point.

    Records must cover m = 0..M-1 contiguously; standard errors combine in
    quadrature and w21 is the conjugate of w12 by construction.
    """
    if not records:
        raise InvalidArgumentError("no records to assemble")
    recs = sorted(records, key=lambda r: r.m)
    if [r.m for r in recs] != list(range(len(recs))):
        raise InvalidArgumentError(
            f"records must cover m = 0..{len(recs) - 1} contiguously"
        )
    alpha = recs[0].alpha
    signs = (-1.0) ** np.arange(len(recs))
    w = np.zeros((2, 2), dtype=complex)
    w[0, 0] = TWO_OVER_PI * np.dot(signs, [r.rho11 for r in recs])
    w[1, 1] = TWO_OVER_PI * np.dot(signs, [r.rho22 for r in recs])
    w[0, 1] = TWO_OVER_PI * complex(
        np.dot(signs, [r.re_rho12 for r in recs]),
        np.dot(signs, [r.im_rho12 for r in recs]),
    )
    w[1, 0] = np.conj(w[0, 1])
    quad = lambda vals: TWO_OVER_PI * math.sqrt(float(np.sum(np.square(vals))))
    stderr = np.array([
        [quad([r.stderr_rho11 for r in recs]), quad([r.stderr_re_rho12 for r in recs])],
        [quad([r.stderr_im_rho12 for r in recs]), quad([r.stderr_rho22 for r in recs])],
    ])
    return WignerMatrixSample(alpha=alpha, w=w, stderr=stderr)
