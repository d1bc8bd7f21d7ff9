"""Expected retrieval score: exact enumeration and Metropolis sampling.

The population of relevant-image counts across devices is a composition
``(q_0, ..., q_N)`` of K into N+1 bins, multinomially distributed under the
per-image pass probability. Conditioned on one composition, every frame's
contention level is a tail sum of the bins, which yields a per-frame
transmission success probability; averaging it over the occupied frames
gives the composition's success score, and the expected retrieval score is
an affine function of that score's mean over compositions.

Small instances are summed exactly over all compositions; larger ones are
sampled with a Metropolis chain whose proposal moves one device between two
bins. The verbatim acceptance ratio ignores the proposal's mild asymmetry
(the eligible-bin count changes as bins empty or fill); ``hastings=True``
adds the standard correction, which makes the chain's stationary law match
the multinomial exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from scipy.stats import binom

from .config import ScenarioConfig
from .energy import p_th, quad_interval, gaussian_tail
from .sifi import fidelity_distance

__all__ = [
    "EnumerationBudgetError",
    "Realization",
    "compositions",
    "realization_pmf",
    "active_devices",
    "frames_needed",
    "success_probability",
    "p_delta",
    "p_actual_collect",
    "expected_z",
    "omega_nonempty_probability",
    "sifi_affine",
    "expected_sifi_exact",
    "expected_sifi_mcmc",
    "mcmc_expected_sifi",
    "McmcResult",
    "ChainResult",
    "run_chain",
]


class EnumerationBudgetError(RuntimeError):
    """The composition count exceeds the configured enumeration budget."""


@dataclass(frozen=True)
class Realization:
    """Device counts per relevant-image count: ``counts[v]`` devices hold v."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        for value in self.counts:
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"realization bin {value!r} must be an "
                                 f"integer >= 0")

    @property
    def device_count(self) -> int:
        return sum(self.counts)

    @property
    def max_count(self) -> int:
        return len(self.counts) - 1


RealizationLike = Union[Realization, Sequence[int]]


def _bins(psi: RealizationLike) -> Sequence[int]:
    if isinstance(psi, Realization):
        return psi.counts
    return psi


def compositions(total: int, bins: int) -> Iterator[tuple[int, ...]]:
    """All orderings of ``total`` identical devices into ``bins`` bins."""
    if bins < 1:
        raise ValueError(f"bins={bins} must be >= 1")
    if bins == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in compositions(total - head, bins - 1):
            yield (head,) + rest


def realization_pmf(psi: RealizationLike, images_per_device: int,
                    device_count: int, pass_probability: float) -> float:
    """Multinomial probability of one composition; 0 if the bins miss K.

    Evaluated in log space so large factorials and tiny bin probabilities
    never overflow.
    """
    counts = _bins(psi)
    if len(counts) != images_per_device + 1:
        raise ValueError(
            f"realization has {len(counts)} bins, expected "
            f"{images_per_device + 1}")
    if sum(counts) != device_count:
        return 0.0
    log_rel = binom.logpmf(np.arange(images_per_device + 1),
                           images_per_device, pass_probability)
    return math.exp(_log_pmf(counts, device_count, log_rel))


def _log_pmf(counts: Sequence[int], device_count: int,
             log_rel: Sequence[float]) -> float:
    total = math.lgamma(device_count + 1)
    for nu, q in enumerate(counts):
        if q == 0:
            continue
        term = log_rel[nu]
        if term == -math.inf:
            return -math.inf
        total += q * term - math.lgamma(q + 1)
    return total


def active_devices(psi: RealizationLike, frame: int) -> int:
    """Devices still transmitting in a given frame (1-based index)."""
    counts = _bins(psi)
    images_per_device = len(counts) - 1
    if not 1 <= frame <= images_per_device:
        raise ValueError(f"frame={frame} outside [1, {images_per_device}]")
    return sum(counts[frame:])


def frames_needed(psi: RealizationLike) -> int:
    """Frames until every queue drains: the largest occupied bin index."""
    counts = _bins(psi)
    for nu in range(len(counts) - 1, -1, -1):
        if counts[nu] > 0:
            return nu
    return 0


def success_probability(psi: RealizationLike, slots: int) -> float:
    """Per-frame mean of the lone-in-slot probability over occupied frames."""
    if slots < 1:
        raise ValueError(f"slots={slots} must be >= 1")
    counts = _bins(psi)
    horizon = frames_needed(counts)
    if horizon == 0:
        return 1.0
    base = 1.0 - 1.0 / slots
    total = 0.0
    remaining = sum(counts[1:])
    prev = 0
    for nu in range(1, horizon + 1):
        if counts[nu] == 0:
            continue
        total += (nu - prev) * base ** (remaining - 1)
        remaining -= counts[nu]
        prev = nu
    return total / horizon


def p_delta(truth_threshold: float, truth) -> float:
    """Probability one image is actually relevant (upper tail of truth)."""
    if not 0.0 <= truth_threshold <= 1.0:
        raise ValueError(f"truth_threshold={truth_threshold} outside [0, 1]")
    return float(1.0 - truth.cdf(truth_threshold))


def _detected_actual_mass(cfg: ScenarioConfig) -> float:
    """Joint mass of being actually relevant and clearing the device filter."""

    def integrand(beta):
        return (gaussian_tail((cfg.relevance_threshold - beta)
                              / cfg.model_noise)
                * cfg.truth_distribution.density(beta))

    return quad_interval(integrand, cfg.truth_threshold, 1.0,
                         points=[cfg.relevance_threshold])


def p_actual_collect(psi: RealizationLike, cfg: ScenarioConfig) -> float:
    """Probability an actually-relevant image is detected and delivered."""
    pdelta = p_delta(cfg.truth_threshold, cfg.truth_distribution)
    if pdelta <= 0.0:
        raise ValueError("no image is ever actually relevant "
                         "(upper-tail mass is zero)")
    ps = success_probability(psi, cfg.frame_slots())
    return ps * _detected_actual_mass(cfg) / pdelta


def expected_z(psi: RealizationLike, cfg: ScenarioConfig) -> float:
    """Expected per-image score contribution given a composition."""
    pa = p_actual_collect(psi, cfg)
    kd = fidelity_distance(cfg.compression_rate)
    return (1.0 - kd) * pa + (1.0 - pa) * (1.0 - cfg.penalty)


def omega_nonempty_probability(cfg: ScenarioConfig) -> float:
    """Probability at least one of the K*N images is actually relevant."""
    pdelta = p_delta(cfg.truth_threshold, cfg.truth_distribution)
    images = cfg.device_count * cfg.images_per_device
    return 1.0 - (1.0 - pdelta) ** images


def sifi_affine(cfg: ScenarioConfig) -> tuple[float, float]:
    """Coefficients (offset, slope) with score = offset + slope * success.

    The per-composition expected score is affine in the composition's
    success probability, so summing or sampling only needs the success
    mean. A zero actually-relevant tail collapses to the constant 1.
    """
    pdelta = p_delta(cfg.truth_threshold, cfg.truth_distribution)
    if pdelta <= 0.0:
        return 1.0, 0.0
    p_omega = omega_nonempty_probability(cfg)
    detect = _detected_actual_mass(cfg)
    kd = fidelity_distance(cfg.compression_rate)
    gamma = cfg.penalty
    offset = p_omega * (1.0 - gamma) + (1.0 - p_omega)
    slope = p_omega * (gamma - kd) * detect / pdelta
    return offset, slope


def expected_sifi_exact(cfg: ScenarioConfig,
                        budget: int = 10_000_000) -> float:
    """Expected score by full enumeration of the composition space.

    Raises :class:`EnumerationBudgetError` when the composition count
    C(K+N, N) exceeds ``budget``; use the Metropolis estimate instead.
    """
    devices = cfg.device_count
    images = cfg.images_per_device
    count = math.comb(devices + images, images)
    if count > budget:
        raise EnumerationBudgetError(
            f"{count} compositions exceed the budget of {budget}")
    offset, slope = sifi_affine(cfg)
    if slope == 0.0:
        return offset
    pth = p_th(cfg.relevance_threshold, cfg.model_noise,
               cfg.truth_distribution)
    log_rel = binom.logpmf(np.arange(images + 1), images, pth).tolist()
    slots = cfg.frame_slots()
    total_weight = 0.0
    weighted_success = 0.0
    for psi in compositions(devices, images + 1):
        log_p = _log_pmf(psi, devices, log_rel)
        if log_p == -math.inf:
            continue
        weight = math.exp(log_p)
        total_weight += weight
        weighted_success += weight * success_probability(psi, slots)
    assert abs(total_weight - 1.0) < 1e-6
    return offset + slope * weighted_success


# --- Metropolis chain over compositions -------------------------------------


@dataclass(frozen=True)
class ChainResult:
    """Raw chain outputs, independent of the score mapping."""

    samples: int
    mean_success: float
    acceptance_rate: float
    invalid_states: int
    checked_states: int
    state_counts: Optional[dict]
    success_trace: Optional[np.ndarray]


@dataclass(frozen=True)
class McmcResult:
    """Metropolis estimate of the expected score plus chain diagnostics."""

    estimate: float
    samples: int
    acceptance_rate: float
    mean_success: float
    invalid_states: int
    checked_states: int
    state_counts: Optional[dict] = None
    success_trace: Optional[np.ndarray] = None


def _initial_state(device_count: int, n_bins: int) -> list[int]:
    # devices spread round-robin over the bins, as evenly as possible
    counts = [0] * n_bins
    for index in range(device_count):
        counts[index % n_bins] += 1
    return counts


def _state_success(counts: list[int], occupied: list[int],
                   pow_base: list[float]) -> float:
    bins = sorted(b for b in occupied if b > 0)
    if not bins:
        return 1.0
    total = 0.0
    remaining = sum(counts[b] for b in bins)
    prev = 0
    for nu in bins:
        total += (nu - prev) * pow_base[remaining]
        remaining -= counts[nu]
        prev = nu
    return total / bins[-1]


def run_chain(log_rel: Sequence[float], device_count: int, slots: int,
              samples: int, seed, burn_in: int = 0, hastings: bool = False,
              state_stride: int = 0, keep_trace: bool = False,
              check_every: int = 1000) -> ChainResult:
    """Run the one-device-move Metropolis chain over compositions.

    ``log_rel`` holds the log bin probabilities (length N+1). Each step
    decrements a uniformly chosen occupied bin, increments a uniformly
    chosen other bin, and accepts when a fresh uniform draw does not exceed
    the probability ratio (with the proposal correction when ``hastings``).
    Moves between two zero-probability states are always taken, letting a
    chain started outside the support random-walk into it.

    ``state_stride`` > 0 records every stride-th post-update state;
    ``check_every`` >= 1 revalidates the full state at that period.
    """
    if samples < 1:
        raise ValueError(f"samples={samples} must be >= 1")
    n_bins = len(log_rel)
    log_rel = [float(v) for v in log_rel]
    counts = _initial_state(device_count, n_bins)
    occupied = [b for b in range(n_bins) if counts[b] > 0]
    position = {b: i for i, b in enumerate(occupied)}
    base = 1.0 - 1.0 / slots
    # pow_base[w] = base^(w-1) for w >= 1; index 0 is never consulted
    pow_base = [1.0] + [base ** w for w in range(device_count)]

    rng = np.random.default_rng(seed)
    total_steps = burn_in + samples
    accepted = 0
    success_sum = 0.0
    current_success = _state_success(counts, occupied, pow_base)
    state_counts: Optional[dict] = {} if state_stride > 0 else None
    trace = np.empty(samples) if keep_trace else None
    invalid = 0
    checked = 0

    block = 4096
    drawn = np.empty((0, 3))
    cursor = block
    log = math.log
    for step in range(total_steps):
        if cursor >= len(drawn):
            drawn = rng.random((block, 3))
            cursor = 0
        u_from, u_to, u_accept = drawn[cursor]
        cursor += 1

        source = occupied[int(u_from * len(occupied))]
        target = int(u_to * (n_bins - 1))
        if target >= source:
            target += 1

        ratio = (log_rel[target] - log_rel[source]
                 + log(counts[source]) - log(counts[target] + 1))
        if hastings and not math.isnan(ratio):
            after = (len(occupied) - (1 if counts[source] == 1 else 0)
                     + (1 if counts[target] == 0 else 0))
            ratio += log(len(occupied)) - log(after)

        if math.isnan(ratio):
            accept = True  # both states outside the support: keep wandering
        else:
            accept = (u_accept <= 0.0) or (log(u_accept) <= ratio)

        if accept:
            accepted += 1
            counts[source] -= 1
            assert counts[source] >= 0
            if counts[source] == 0:
                index = position.pop(source)
                last = occupied[-1]
                occupied[index] = last
                position[last] = index
                occupied.pop()
            counts[target] += 1
            if counts[target] == 1:
                position[target] = len(occupied)
                occupied.append(target)
            current_success = _state_success(counts, occupied, pow_base)

        if check_every >= 1 and step % check_every == 0:
            checked += 1
            if sum(counts) != device_count or min(counts) < 0:
                invalid += 1

        if step < burn_in:
            continue
        sample_index = step - burn_in
        success_sum += current_success
        if trace is not None:
            trace[sample_index] = current_success
        if state_counts is not None and sample_index % state_stride == 0:
            key = tuple(counts)
            state_counts[key] = state_counts.get(key, 0) + 1

    return ChainResult(
        samples=samples,
        mean_success=success_sum / samples,
        acceptance_rate=accepted / total_steps,
        invalid_states=invalid,
        checked_states=checked,
        state_counts=state_counts,
        success_trace=trace,
    )


def mcmc_expected_sifi(cfg: ScenarioConfig, samples: int, seed,
                       burn_in: int = 0, hastings: bool = False,
                       state_stride: int = 0, keep_trace: bool = False,
                       check_every: int = 1000) -> McmcResult:
    """Metropolis estimate of the expected score, with diagnostics."""
    pth = p_th(cfg.relevance_threshold, cfg.model_noise,
               cfg.truth_distribution)
    log_rel = binom.logpmf(np.arange(cfg.images_per_device + 1),
                           cfg.images_per_device, pth)
    chain = run_chain(log_rel, cfg.device_count, cfg.frame_slots(),
                      samples, seed, burn_in=burn_in, hastings=hastings,
                      state_stride=state_stride, keep_trace=keep_trace,
                      check_every=check_every)
    offset, slope = sifi_affine(cfg)
    return McmcResult(
        estimate=offset + slope * chain.mean_success,
        samples=chain.samples,
        acceptance_rate=chain.acceptance_rate,
        mean_success=chain.mean_success,
        invalid_states=chain.invalid_states,
        checked_states=chain.checked_states,
        state_counts=chain.state_counts,
        success_trace=chain.success_trace,
    )


def expected_sifi_mcmc(cfg: ScenarioConfig, samples: int, seed,
                       burn_in: int = 0, hastings: bool = False) -> float:
    """Metropolis estimate of the expected score (estimate only)."""
    return mcmc_expected_sifi(cfg, samples, seed, burn_in=burn_in,
                              hastings=hastings).estimate
