"""Monte Carlo simulator of one pull round over the slotted random-access channel.

Round structure: every device scores its N images against the query, queues
the ones whose noisy score clears the threshold, then drains the queue one
image per frame, picking a uniformly random queued image and a uniformly
random slot out of L. A transmission survives only if it is alone in its
slot; collided images are dropped (no retransmission). By default frames
run until every queue is empty; ``fixed_frames`` caps the horizon instead,
leaving unattempted images undelivered.

Scores are compared to the threshold unclamped, keeping the simulation on
the same probability model as the Q-function analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .config import ScenarioConfig, packet_bits
from .energy import EnergyBreakdown, model_load_total
from .hardware import inference_energy
from .sifi import ImageRecord, fidelity_distance, realized_sifi

__all__ = [
    "DeviceState",
    "RoundOutcome",
    "RoundStats",
    "SimAggregate",
    "draw_similarities",
    "run_round",
    "simulate",
]

SeedLike = Union[int, Sequence[int]]


@dataclass
class DeviceState:
    """One device's scored images and its transmission queue."""

    device_id: int
    records: list[ImageRecord]
    queue: list[int]  # indices of relevant images, in storage order


@dataclass(frozen=True)
class RoundOutcome:
    """Full record of one simulated round."""

    sifi: float
    per_device_energy: list[EnergyBreakdown]
    frames_used: int
    delivered_count: int
    actual_relevant_count: int
    relevant_counts: list[int]
    records: list[list[ImageRecord]]


@dataclass(frozen=True)
class RoundStats:
    """Lightweight per-round numbers for CSV emission."""

    index: int
    sifi: float
    mean_device_energy: float
    delivered: int
    actual_relevant: int
    frames: int


@dataclass(frozen=True)
class SimAggregate:
    """Round-averaged results of a simulation run."""

    rounds: int
    mean_sifi: float
    sifi_stderr: float
    mean_total_energy: float
    total_energy_stderr: float
    mean_delivered: float
    mean_actual_relevant: float
    mean_frames: float
    rounds_detail: Optional[list[RoundStats]] = None


class _Context:
    """Per-config constants hoisted out of the round loop."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.devices = cfg.device_count
        self.images = cfg.images_per_device
        self.vth = cfg.relevance_threshold
        self.delta = cfg.truth_threshold
        self.sigma = cfg.model_noise
        self.slots = cfg.frame_slots()
        self.fixed_frames = cfg.fixed_frames
        self.kd = fidelity_distance(cfg.compression_rate)
        self.gamma = cfg.penalty
        self.truth = cfg.truth_distribution
        behavior = inference_energy(cfg.behavior_hw, cfg.behavior_model,
                                    cfg.image)
        self.comp_fixed = self.images * behavior + model_load_total(cfg)
        self.comp_per_relevant = inference_energy(cfg.compressor_hw,
                                                  cfg.compressor_model,
                                                  cfg.image)
        self.comm_fixed = (cfg.radio.rx_power
                           * (cfg.behavior_model.size
                              * cfg.behavior_model.tx_bits
                              + cfg.query_length * cfg.behavior_hw.sram_bits)
                           / cfg.radio.rate)
        self.comm_per_tx = cfg.radio.tx_power * packet_bits(cfg) / cfg.radio.rate


class _RoundData:
    """Raw arrays of one round, shared by the fast and the record-building paths."""

    __slots__ = ("beta", "observed", "relevant", "actual", "delivered",
                 "relevant_counts", "attempted", "frames", "sifi",
                 "computation", "communication")


def _sample_scores(ctx: _Context, rng: np.random.Generator):
    beta = np.asarray(ctx.truth.sample(rng, (ctx.devices, ctx.images)),
                      dtype=float)
    observed = beta + rng.normal(0.0, ctx.sigma, (ctx.devices, ctx.images))
    return beta, observed


def _run_round_core(ctx: _Context, rng: np.random.Generator) -> _RoundData:
    data = _RoundData()
    beta, observed = _sample_scores(ctx, rng)
    relevant = observed >= ctx.vth
    rel_counts = relevant.sum(axis=1)
    order_keys = rng.random((ctx.devices, ctx.images))

    drain = int(rel_counts.max(initial=0))
    horizon = drain
    if ctx.fixed_frames is not None:
        horizon = min(drain, ctx.fixed_frames)
    attempted = np.minimum(rel_counts, horizon)

    delivered = np.zeros_like(relevant)
    if horizon > 0:
        slots = rng.integers(0, ctx.slots, size=(ctx.devices, horizon))
        active = np.arange(horizon)[None, :] < attempted[:, None]
        keys = slots + ctx.slots * np.arange(horizon)[None, :]
        occupancy = np.bincount(keys[active], minlength=ctx.slots * horizon)
        alone = active & (occupancy[keys] == 1)
        for dev in range(ctx.devices):
            sent = int(attempted[dev])
            if sent == 0:
                continue
            queue = np.flatnonzero(relevant[dev])
            order = np.argsort(order_keys[dev, queue], kind="stable")
            chosen = queue[order[:sent]]
            delivered[dev, chosen] = alone[dev, :sent]

    actual = beta >= ctx.delta
    omega = int(actual.sum())
    delivered_actual = int(np.count_nonzero(delivered & actual))
    if omega == 0:
        sifi = 1.0
    else:
        sifi = 1.0 - (ctx.kd * delivered_actual
                      + ctx.gamma * (omega - delivered_actual)) / omega

    data.beta = beta
    data.observed = observed
    data.relevant = relevant
    data.actual = actual
    data.delivered = delivered
    data.relevant_counts = rel_counts
    data.attempted = attempted
    data.frames = horizon
    data.sifi = sifi
    data.computation = ctx.comp_fixed + rel_counts * ctx.comp_per_relevant
    data.communication = ctx.comm_fixed + attempted * ctx.comm_per_tx
    return data


def draw_similarities(cfg: ScenarioConfig,
                      rng: np.random.Generator) -> list[DeviceState]:
    """Sample true and observed scores for every image; queue the relevant ones."""
    ctx = _Context(cfg)
    beta, observed = _sample_scores(ctx, rng)
    states = []
    for dev in range(ctx.devices):
        records = [
            ImageRecord(
                true_similarity=float(beta[dev, img]),
                observed_similarity=float(observed[dev, img]),
                is_relevant=bool(observed[dev, img] >= ctx.vth),
                is_actual_relevant=bool(beta[dev, img] >= ctx.delta),
                delivered=False,
            )
            for img in range(ctx.images)
        ]
        queue = [img for img in range(ctx.images) if records[img].is_relevant]
        states.append(DeviceState(device_id=dev, records=records, queue=queue))
    return states


def run_round(cfg: ScenarioConfig, seed: SeedLike) -> RoundOutcome:
    """Simulate one full round and return its complete outcome record."""
    ctx = _Context(cfg)
    rng = np.random.default_rng(seed)
    data = _run_round_core(ctx, rng)

    records: list[list[ImageRecord]] = []
    for dev in range(ctx.devices):
        records.append([
            ImageRecord(
                true_similarity=float(data.beta[dev, img]),
                observed_similarity=float(data.observed[dev, img]),
                is_relevant=bool(data.relevant[dev, img]),
                is_actual_relevant=bool(data.actual[dev, img]),
                delivered=bool(data.delivered[dev, img]),
            )
            for img in range(ctx.images)
        ])
    energy = [
        EnergyBreakdown(computation=float(data.computation[dev]),
                        communication=float(data.communication[dev]))
        for dev in range(ctx.devices)
    ]
    flat = [record for device in records for record in device]
    sifi = realized_sifi(flat, ctx.gamma, cfg.compression_rate)
    assert abs(sifi - data.sifi) < 1e-12
    return RoundOutcome(
        sifi=sifi,
        per_device_energy=energy,
        frames_used=data.frames,
        delivered_count=int(data.delivered.sum()),
        actual_relevant_count=int(data.actual.sum()),
        relevant_counts=[int(c) for c in data.relevant_counts],
        records=records,
    )


def simulate(cfg: ScenarioConfig, rounds: int, seed: int,
             keep_rounds: bool = False) -> SimAggregate:
    """Average many independent rounds.

    Round ``i`` runs on its own generator seeded by ``(seed, i)``, so results
    are reproducible and ``rounds=1`` reproduces ``run_round(cfg, (seed, 0))``
    exactly. Accumulation is in round order, keeping aggregates bitwise stable.
    """
    if rounds < 1:
        raise ValueError(f"rounds={rounds} must be >= 1")
    ctx = _Context(cfg)
    sifi_sum = 0.0
    sifi_sq = 0.0
    energy_sum = 0.0
    energy_sq = 0.0
    delivered_sum = 0
    omega_sum = 0
    frames_sum = 0
    detail: Optional[list[RoundStats]] = [] if keep_rounds else None
    for index in range(rounds):
        rng = np.random.default_rng((seed, index))
        data = _run_round_core(ctx, rng)
        mean_energy = float(np.mean(data.computation + data.communication))
        sifi_sum += data.sifi
        sifi_sq += data.sifi * data.sifi
        energy_sum += mean_energy
        energy_sq += mean_energy * mean_energy
        delivered_sum += int(data.delivered.sum())
        omega_sum += int(data.actual.sum())
        frames_sum += data.frames
        if detail is not None:
            detail.append(RoundStats(index=index, sifi=data.sifi,
                                     mean_device_energy=mean_energy,
                                     delivered=int(data.delivered.sum()),
                                     actual_relevant=int(data.actual.sum()),
                                     frames=data.frames))
    mean_sifi = sifi_sum / rounds
    mean_energy = energy_sum / rounds
    return SimAggregate(
        rounds=rounds,
        mean_sifi=mean_sifi,
        sifi_stderr=_stderr(sifi_sum, sifi_sq, rounds),
        mean_total_energy=mean_energy,
        total_energy_stderr=_stderr(energy_sum, energy_sq, rounds),
        mean_delivered=delivered_sum / rounds,
        mean_actual_relevant=omega_sum / rounds,
        mean_frames=frames_sum / rounds,
        rounds_detail=detail,
    )


def _stderr(total: float, total_sq: float, n: int) -> float:
    if n < 2:
        return 0.0
    var = (total_sq - total * total / n) / (n - 1)
    return float(np.sqrt(max(var, 0.0)) / np.sqrt(n))
