"""Per-device energy accounting and the relevance-probability machinery.

A device always scores all N stored images with the behavior model, then
compresses and transmits the S images that passed the relevance threshold.
The fixed per-query overhead (behavior-model reception, query reception,
weight loading, scoring) is independent of S; every relevant image adds one
compressor inference plus one packet transmission.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc
from scipy.stats import binom

from .config import ScenarioConfig, TruthDistribution, packet_bits
from .hardware import inference_energy, model_load_energy

__all__ = [
    "QuadratureError",
    "EnergyBreakdown",
    "gaussian_tail",
    "quad_interval",
    "computation_energy",
    "communication_energy",
    "device_energy",
    "model_load_total",
    "fixed_overhead_energy",
    "per_relevant_image_energy",
    "p_th",
    "p_rel",
    "rel_count_pmf",
    "expected_total_energy",
]


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


QUAD_ABS_TOL = 1e-9


@dataclass(frozen=True)
class EnergyBreakdown:
    computation: float
    communication: float

    def __post_init__(self) -> None:
        if self.computation < 0 or self.communication < 0:
            raise ValueError("energy terms must be nonnegative")

    @property
    def total(self) -> float:
        return self.computation + self.communication


def gaussian_tail(x):
    """Standard normal upper-tail probability Q(x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def quad_interval(func, lo: float, hi: float,
                  abs_tol: float = QUAD_ABS_TOL, points=None) -> float:
    """Adaptive quadrature of ``func`` over [lo, hi] to ``abs_tol``.

    ``points`` marks interior breakpoints (sharp features); values outside
    the open interval are dropped. Non-convergence raises QuadratureError.
    """
    interior = None
    if points is not None:
        interior = [p for p in points if lo < p < hi] or None
    value, abserr, info, *tail = quad(func, lo, hi, epsabs=abs_tol,
                                      limit=200, points=interior,
                                      full_output=True)
    if tail:
        raise QuadratureError(f"quadrature did not converge: {tail[0]}")
    if abserr > max(abs_tol, 1e-12 * abs(value)) * 10:
        raise QuadratureError(
            f"quadrature error estimate {abserr:.3e} exceeds tolerance")
    return value


def model_load_total(cfg: ScenarioConfig) -> float:
    """One-time energy to stage both models' weights in SRAM, in joules.

    Each model is charged at its own SRAM width by default; with
    ``single_sram_load`` both weight pools are charged at the behavior
    model's width (the two readings coincide for a DRAM cost linear in the
    access width, but the knob keeps the alternative auditable).
    """
    if cfg.single_sram_load:
        merged = cfg.compressor_model
        return (model_load_energy(cfg.behavior_hw, cfg.behavior_model)
                + model_load_energy(cfg.behavior_hw, merged))
    return (model_load_energy(cfg.behavior_hw, cfg.behavior_model)
            + model_load_energy(cfg.compressor_hw, cfg.compressor_model))


def computation_energy(cfg: ScenarioConfig, relevant_count: int) -> float:
    """Compute-side energy for one query: N scorings, S compressions, loads."""
    n = cfg.images_per_device
    if not 0 <= relevant_count <= n:
        raise ValueError(
            f"relevant_count={relevant_count} outside [0, {n}]")
    score = n * inference_energy(cfg.behavior_hw, cfg.behavior_model, cfg.image)
    compress = relevant_count * inference_energy(cfg.compressor_hw,
                                                 cfg.compressor_model, cfg.image)
    return score + compress + model_load_total(cfg)


def communication_energy(cfg: ScenarioConfig, relevant_count: int) -> float:
    """Radio energy: behavior model + query reception, S packet uplinks."""
    if relevant_count < 0:
        raise ValueError(f"relevant_count={relevant_count} must be >= 0")
    rx_bits = (cfg.behavior_model.size * cfg.behavior_model.tx_bits
               + cfg.query_length * cfg.behavior_hw.sram_bits)
    tx_bits = relevant_count * packet_bits(cfg)
    return (cfg.radio.rx_power * rx_bits
            + cfg.radio.tx_power * tx_bits) / cfg.radio.rate


def device_energy(cfg: ScenarioConfig, relevant_count: int,
                  transmitted_count: int | None = None) -> EnergyBreakdown:
    """Total per-device energy split for one query.

    ``transmitted_count`` caps the uplink term when a fixed frame horizon
    stops the queue from draining; by default every relevant image is sent.
    """
    if transmitted_count is None:
        transmitted_count = relevant_count
    return EnergyBreakdown(
        computation=computation_energy(cfg, relevant_count),
        communication=communication_energy(cfg, transmitted_count))


def fixed_overhead_energy(cfg: ScenarioConfig) -> float:
    """Energy spent regardless of how many images pass the filter."""
    return computation_energy(cfg, 0) + communication_energy(cfg, 0)


def per_relevant_image_energy(cfg: ScenarioConfig) -> float:
    """Marginal energy of one relevant image: compression plus transmission."""
    compress = inference_energy(cfg.compressor_hw, cfg.compressor_model,
                                cfg.image)
    return compress + cfg.radio.tx_power * packet_bits(cfg) / cfg.radio.rate


def p_th(relevance_threshold: float, model_noise: float,
         truth: TruthDistribution) -> float:
    """Probability that an image's noisy score clears the device threshold.

    Integrates ``Q((V_th - beta) / sigma)`` against the true-similarity
    density by adaptive quadrature (absolute tolerance 1e-9). The threshold
    is passed as a breakpoint so near-degenerate noise keeps converging.
    """
    if not 0.0 <= relevance_threshold <= 1.0:
        raise ValueError(
            f"relevance_threshold={relevance_threshold} outside [0, 1]")
    if model_noise <= 0:
        raise ValueError(f"model_noise={model_noise} must be > 0")

    def integrand(beta):
        return (gaussian_tail((relevance_threshold - beta) / model_noise)
                * truth.density(beta))

    return quad_interval(integrand, 0.0, 1.0,
                         points=[relevance_threshold])


def p_rel(relevant_count: int, images_per_device: int,
          pass_probability: float) -> float:
    """Probability a device ends up with exactly ``relevant_count`` images."""
    if not 0 <= relevant_count <= images_per_device:
        raise ValueError(
            f"relevant_count={relevant_count} outside [0, {images_per_device}]")
    return float(binom.pmf(relevant_count, images_per_device, pass_probability))


def rel_count_pmf(images_per_device: int, pass_probability: float) -> np.ndarray:
    """Binomial pmf over relevant-image counts 0..N as a vector."""
    counts = np.arange(images_per_device + 1)
    return binom.pmf(counts, images_per_device, pass_probability)


def expected_total_energy(cfg: ScenarioConfig, form: str = "sum") -> float:
    """Expected per-device energy for one query, in joules.

    ``form="sum"`` accumulates over the relevant-count distribution;
    ``form="closed"`` uses the binomial mean directly. Both agree to
    floating-point accuracy and exist so each can check the other.
    """
    pth = p_th(cfg.relevance_threshold, cfg.model_noise, cfg.truth_distribution)
    per_image = per_relevant_image_energy(cfg)
    overhead = fixed_overhead_energy(cfg)
    n = cfg.images_per_device
    if form == "closed":
        return n * pth * per_image + overhead
    if form != "sum":
        raise ValueError(f"unknown form {form!r}")
    counts = np.arange(n + 1)
    weights = rel_count_pmf(n, pth)
    return float(np.dot(counts, weights) * per_image) + overhead
