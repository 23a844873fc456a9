"""Stochastic emulation of the measurement protocol.

Every estimation task owns a counter-based random stream keyed by
``stream_key(master_seed, point_index, m, setting_index)``, where the key
derivation is a chained splitmix64 mix (see :func:`stream_key`).  Results
are therefore independent of execution order and thread count; the mixing
function is part of the reproducibility contract and documented in the
README.

Two sampler modes produce identically distributed trial outcomes:

* ``fast_analytic`` draws each trial as one Bernoulli against the exact
  record probability;
* ``trajectory`` maintains the conditioned state through the cycle sequence
  and draws one Bernoulli per probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import DriveConfig, rabi_spectrum, reduced_after_first_cycle
from .errors import InvalidArgumentError
from .states import NumberStatistics, VibronicDensity, displaced_number_statistics, displace_state
from .tomography import (
    MEASUREMENT_SETTINGS,
    CycleSchedule,
    EstimationRecord,
    assemble_wigner,
    build_schedule,
    exact_success_probability,
    invert_statistics,
    schedule_for_variant,
    suppression_factors,
)
from .wigner import PhaseSpaceGrid, WignerMatrixField

__all__ = [
    "SamplerConfig",
    "TomographyConfig",
    "TrialOutcome",
    "stream_key",
    "task_rng",
    "conditional_probe_probabilities",
    "run_trial",
    "estimate_probability",
    "sample_point",
    "sample_grid",
    "GridSampleResult",
]

_MASK64 = (1 << 64) - 1
MODES = ("fast_analytic", "trajectory")
TRIALS_INTERPRETATIONS = ("per_variant", "per_element")


def _splitmix64(x: int) -> int:
    """One splitmix64 round; the stated 64-bit mixing primitive."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream_key(master_seed: int, *coords: int) -> int:
    """64-bit stream key: key = sm64(master_seed); key = sm64(key ^ c) per coordinate."""
    key = _splitmix64(master_seed & _MASK64)
    for c in coords:
        key = _splitmix64(key ^ (int(c) & _MASK64))
    return key


def task_rng(master_seed: int, *coords: int) -> np.random.Generator:
    """Counter-based (Philox) generator for the task at the given coordinates.

    The mixed 64-bit key feeds the generator through numpy's deterministic
    ``SeedSequence`` expansion (the entropy-pool path of ``Philox(key=...)``
    costs a urandom call per construction and is avoided).
    """
    return np.random.Generator(np.random.Philox(seed=stream_key(master_seed, *coords)))


@dataclass(frozen=True)
class SamplerConfig:
    """How trial outcomes are drawn and how many."""

    trials: int = 1000
    master_seed: int = 20260810
    mode: str = "fast_analytic"
    threads: int = 1
    trials_interpretation: str = "per_variant"
    exact_probabilities: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}")
        if self.trials_interpretation not in TRIALS_INTERPRETATIONS:
            raise InvalidArgumentError(
                f"trials_interpretation must be one of {TRIALS_INTERPRETATIONS}"
            )
        if self.threads < 1:
            raise InvalidArgumentError("threads must be >= 1")

    def trials_per_setting(self) -> int:
        if self.trials_interpretation == "per_variant":
            return self.trials
        return max(1, self.trials // len(MEASUREMENT_SETTINGS))


@dataclass(frozen=True)
class TomographyConfig:
    """Fock-filter settings for grid sampling runs."""

    m_count: int | None = None
    leakage_budget: float = 1e-3
    p_max: int = 200
    k_cap: int = 60
    tail_tol: float = 1e-6
    strict_schedules: bool = True


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one interaction-probe sequence."""

    success: bool
    failure_cycle: int | None = None

    def __post_init__(self):
        if self.success != (self.failure_cycle is None):
            raise InvalidArgumentError("failure_cycle is defined iff the trial failed")


def _probe_unitaries(drive: DriveConfig, tau: float, n_max: int) -> np.ndarray:
    """Per-occupation 2x2 propagators of one interaction pulse, shape (n, 2, 2)."""
    omega = rabi_spectrum(drive, n_max)
    half = 0.5 * omega * tau
    c = np.cos(half)
    s = np.sin(half)
    u = np.empty((n_max, 2, 2), dtype=complex)
    u[:, 0, 0] = c
    u[:, 1, 1] = c
    u[:, 0, 1] = -1j * s * np.exp(1j * drive.phase)
    u[:, 1, 0] = -1j * s * np.exp(-1j * drive.phase)
    return u


def conditional_probe_probabilities(stats: NumberStatistics, drive: DriveConfig,
                                    schedule: CycleSchedule) -> np.ndarray:
    """No-fluorescence probability of each probe, conditioned on past successes.

    After the first no-fluorescence event the electronic state is projected,
    so the surviving motional populations just pick up cosine filters; the
    product of the returned chain equals the total record probability.
    """
    drive_var = replace(drive, phase=schedule.phase)
    populations = reduced_after_first_cycle(stats, drive_var, schedule.tau1)
    probs = np.empty(schedule.k)
    total = float(populations.sum())
    probs[0] = min(max(total, 0.0), 1.0)
    omega = rabi_spectrum(drive, stats.n_stat)
    for q, tau in enumerate(schedule.taus, start=1):
        filtered = populations * np.cos(0.5 * omega * tau) ** 2
        new_total = float(filtered.sum())
        probs[q] = min(max(new_total / total, 0.0), 1.0) if total > 0 else 0.0
        populations, total = filtered, new_total
    return probs


def run_trial(state: VibronicDensity, alpha: complex, drive: DriveConfig,
              schedule: CycleSchedule, rng: np.random.Generator,
              strict: bool = True) -> TrialOutcome:
    """Simulate one full interaction-probe sequence on the conditioned state.

    The displaced composite state is evolved cycle by cycle; each probe is an
    ideal projective measurement whose no-fluorescence branch keeps the
    (renormalised) motional operator attached to the excited level.
    """
    current = displace_state(state, alpha, strict=strict)
    drive_var = replace(drive, phase=schedule.phase)
    taus = (schedule.tau1,) + schedule.taus
    for cycle, tau in enumerate(taus, start=1):
        if tau != 0.0:
            u = _probe_unitaries(drive_var, tau, current.n_max)
            evolved = np.einsum("aik,klab,bjl->ijab", u, current.blocks, u.conj(),
                                optimize=True)
        else:
            evolved = current.blocks
        p_no = float(np.trace(evolved[1, 1]).real)
        p_no = min(max(p_no, 0.0), 1.0)
        if rng.random() >= p_no:
            return TrialOutcome(success=False, failure_cycle=cycle)
        blocks = np.zeros_like(evolved)
        blocks[1, 1] = evolved[1, 1] / p_no
        current = VibronicDensity(blocks, unit_trace=True)
    return TrialOutcome(success=True)


def estimate_probability(state: VibronicDensity, alpha: complex, drive: DriveConfig,
                         schedule: CycleSchedule, config: SamplerConfig,
                         coords: tuple[int, ...] = (),
                         stats: NumberStatistics | None = None,
                         strict: bool = True) -> tuple[float, float]:
    """Estimate the record probability: (successes/trials, binomial stderr)."""
    if stats is None:
        stats = displaced_number_statistics(state, alpha, strict=strict)
    if config.exact_probabilities:
        p = exact_success_probability(state, alpha, drive, schedule, stats=stats)
        return min(max(p, 0.0), 1.0), 0.0

    trials = config.trials_per_setting()
    rng = task_rng(config.master_seed, *coords)
    if config.mode == "fast_analytic":
        p = exact_success_probability(state, alpha, drive, schedule, stats=stats)
        p = min(max(p, 0.0), 1.0)
        successes = int(np.count_nonzero(rng.random(trials) < p))
    else:
        chain = conditional_probe_probabilities(stats, drive, schedule)
        draws = rng.random((trials, len(chain)))
        successes = int(np.count_nonzero(np.all(draws < chain[np.newaxis, :], axis=1)))
    p_hat = successes / trials
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / trials)


@dataclass(frozen=True)
class _TargetFilters:
    """Per-target filtering data precomputed once and shared across points.

    ``weights`` holds, per measurement setting, the (cos^2, sin^2, sin)
    vectors of the first interaction time plus the laser phase;
    ``cycle_factors`` are the per-cycle cosine filters of the later probes.
    """

    schedule: CycleSchedule
    suppression: np.ndarray
    sign: float
    weights: tuple
    cycle_factors: np.ndarray


def _build_filter_bank(drive: DriveConfig, schedules: dict[int, CycleSchedule],
                       n_stat: int) -> dict[int, _TargetFilters]:
    omega = rabi_spectrum(drive, n_stat)
    bank = {}
    for m, base in schedules.items():
        suppression = suppression_factors(drive, base, n_stat)
        weights = []
        for variant, phase in MEASUREMENT_SETTINGS:
            sched = schedule_for_variant(base, drive, variant, phase)
            half = 0.5 * omega * sched.tau1
            weights.append((np.cos(half) ** 2, np.sin(half) ** 2,
                            np.sin(omega * sched.tau1), phase))
        if base.multipliers:
            cycle_factors = np.cos(0.5 * np.outer(np.array(base.taus), omega)) ** 2
        else:
            cycle_factors = np.empty((0, n_stat))
        bank[m] = _TargetFilters(base, suppression, float(np.sign(omega[m])),
                                 tuple(weights), cycle_factors)
    return bank


def _chain_from_populations(populations: np.ndarray,
                            cycle_factors: np.ndarray) -> np.ndarray:
    """Conditional no-fluorescence chain from the first-cycle populations."""
    probs = np.empty(1 + cycle_factors.shape[0])
    total = float(populations.sum())
    probs[0] = min(max(total, 0.0), 1.0)
    current = populations
    for q in range(cycle_factors.shape[0]):
        current = current * cycle_factors[q]
        new_total = float(current.sum())
        probs[q + 1] = min(max(new_total / total, 0.0), 1.0) if total > 0 else 0.0
        total = new_total
    return probs


def sample_point(state: VibronicDensity, alpha: complex, drive: DriveConfig,
                 tomo: TomographyConfig, sampler: SamplerConfig,
                 point_index: int = 0,
                 stats: NumberStatistics | None = None,
                 schedules: dict[int, CycleSchedule] | None = None,
                 m_count: int | None = None,
                 filter_bank: dict[int, _TargetFilters] | None = None,
                 strict: bool = True) -> list[EstimationRecord]:
    """Estimate the displaced statistics for every target m at one point.

    Runs the four (first-interaction-time, laser-phase) settings per m and
    inverts them into the record; standard errors propagate in quadrature.
    """
    if stats is None:
        stats = displaced_number_statistics(state, alpha, strict=strict)
    if m_count is None:
        m_count = tomo.m_count or _tail_count(stats, tomo.tail_tol)
    if filter_bank is None:
        if schedules is None:
            schedules = {
                m: build_schedule(drive, m, stats.n_stat, tomo.leakage_budget,
                                  tomo.p_max, tomo.k_cap,
                                  strict=tomo.strict_schedules)
                for m in range(m_count)
            }
        filter_bank = _build_filter_bank(drive, schedules, stats.n_stat)

    v11 = stats.values[:, 0, 0].real
    v22 = stats.values[:, 1, 1].real
    v12r = stats.values[:, 0, 1].real
    v12i = stats.values[:, 0, 1].imag
    trials = sampler.trials_per_setting()

    records = []
    for m in range(m_count):
        filters = filter_bank[m]
        estimates = []
        worst_leak = 0.0
        for setting_index, (cos2, sin2, sin1, phase) in enumerate(filters.weights):
            populations = cos2 * v22 + sin2 * v11 + sin1 * (
                math.cos(phase) * v12i - math.sin(phase) * v12r)
            contrib = filters.suppression * populations
            leak = float(np.abs(contrib).sum() - abs(contrib[m]))
            worst_leak = max(worst_leak, leak)
            p = min(max(float(contrib.sum()), 0.0), 1.0)
            if sampler.exact_probabilities:
                estimates.append((p, 0.0))
                continue
            rng = task_rng(sampler.master_seed, point_index, m, setting_index)
            if sampler.mode == "fast_analytic":
                successes = int(np.count_nonzero(rng.random(trials) < p))
            else:
                chain = _chain_from_populations(populations, filters.cycle_factors)
                draws = rng.random((trials, len(chain)))
                successes = int(np.count_nonzero(
                    np.all(draws < chain[np.newaxis, :], axis=1)))
            p_hat = successes / trials
            estimates.append((p_hat, math.sqrt(p_hat * (1.0 - p_hat) / trials)))
        (pz, sz), (pp, sp), (ph0, sh0), (phn, shn) = estimates
        rho11, rho22, re12, im12 = invert_statistics(pz, pp, ph0, phn)
        # tau1 = pi/(2|Omega_m|) flips the coherence readout when Omega_m < 0
        records.append(EstimationRecord(
            alpha=alpha, m=m,
            rho11=rho11, rho22=rho22,
            re_rho12=filters.sign * re12, im_rho12=filters.sign * im12,
            stderr_rho11=sp, stderr_rho22=sz,
            stderr_re_rho12=math.sqrt(shn**2 + 0.25 * (sz**2 + sp**2)),
            stderr_im_rho12=math.sqrt(sh0**2 + 0.25 * (sz**2 + sp**2)),
            trials=trials,
            leakage_bound=worst_leak,
        ))
    return records


def _tail_count(stats: NumberStatistics, tail_tol: float) -> int:
    occ = stats.occupations()
    tail = np.cumsum(occ[::-1])[::-1]
    keep = np.nonzero(tail >= tail_tol)[0]
    return int(keep[-1]) + 1 if keep.size else 1


@dataclass(frozen=True)
class GridSampleResult:
    """Sampled field plus everything needed to audit the run."""

    field: WignerMatrixField
    records: list[list[EstimationRecord]]
    schedules: dict[int, CycleSchedule]
    n_stat: int
    m_counts: list[int]


def sample_grid(state: VibronicDensity, grid: PhaseSpaceGrid, drive: DriveConfig,
                tomo: TomographyConfig, sampler: SamplerConfig,
                strict: bool = True) -> GridSampleResult:
    """Sampled reconstruction over a grid; deterministic for a given seed.

    Point tasks run independently (optionally threaded); per-task random
    streams are keyed by grid index, so the output is invariant under the
    degree of parallelism.
    """
    from concurrent.futures import ThreadPoolExecutor

    alphas = grid.alphas()

    def stats_at(alpha: complex) -> NumberStatistics:
        return displaced_number_statistics(state, alpha, strict=strict)

    if sampler.threads > 1:
        with ThreadPoolExecutor(max_workers=sampler.threads) as pool:
            all_stats = list(pool.map(stats_at, alphas))
    else:
        all_stats = [stats_at(alpha) for alpha in alphas]

    tail_counts = [_tail_count(s, tomo.tail_tol) for s in all_stats]
    if tomo.m_count is None:
        m_counts = tail_counts
    else:
        m_counts = [min(tomo.m_count, state.n_max)] * len(alphas)
    n_stat = max(max(tail_counts), max(m_counts))

    schedules = {
        m: build_schedule(drive, m, n_stat, tomo.leakage_budget, tomo.p_max,
                          tomo.k_cap, strict=tomo.strict_schedules)
        for m in range(max(m_counts))
    }
    # filters span the full statistics range carried by the per-point stats
    filter_bank = _build_filter_bank(drive, schedules, state.n_max)

    def point_task(index: int) -> list[EstimationRecord]:
        return sample_point(state, alphas[index], drive, tomo, sampler,
                            point_index=index, stats=all_stats[index],
                            schedules=schedules, m_count=m_counts[index],
                            filter_bank=filter_bank, strict=strict)

    indices = range(len(alphas))
    if sampler.threads > 1:
        with ThreadPoolExecutor(max_workers=sampler.threads) as pool:
            all_records = list(pool.map(point_task, indices))
    else:
        all_records = [point_task(i) for i in indices]

    w = np.empty((len(alphas), 2, 2), dtype=complex)
    stderr = np.empty((len(alphas), 2, 2))
    leakage = np.empty(len(alphas))
    for p, recs in enumerate(all_records):
        sample = assemble_wigner(recs)
        w[p] = sample.w
        stderr[p] = sample.stderr
        leakage[p] = max(r.leakage_bound for r in recs)
    field = WignerMatrixField(grid=grid, w=w, stderr=stderr, leakage=leakage)
    return GridSampleResult(field=field, records=all_records, schedules=schedules,
                            n_stat=n_stat, m_counts=m_counts)
