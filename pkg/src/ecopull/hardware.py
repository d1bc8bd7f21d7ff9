"""Per-inference energy of a TinyML model on fixed-point hardware.

The per-operation energies follow the two-level-SRAM accelerator model:
a MUAC operation costs ``3.7 * (b_q / b_muac)^1.25`` pJ, a ``b_q``-bit DRAM
access costs ``128 * 3.7 * (b_q / b_muac)`` pJ, local-SRAM traffic costs one
MUAC, main-SRAM traffic two. Everything is returned in joules.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

from .config import HardwareProfile, ImageGeometry, ModelCost

__all__ = [
    "PICOJOULE",
    "e_muac",
    "e_dram_access",
    "InferenceBreakdown",
    "inference_breakdown",
    "inference_energy",
    "model_load_energy",
]

PICOJOULE = 1e-12


def e_muac(hw: HardwareProfile) -> float:
    """Energy of a single multiply-accumulate, in joules."""
    return 3.7 * (hw.sram_bits / hw.muac_bits) ** 1.25 * PICOJOULE


def e_dram_access(hw: HardwareProfile) -> float:
    """Energy of one ``sram_bits``-wide DRAM access, in joules."""
    return 128.0 * 3.7 * (hw.sram_bits / hw.muac_bits) * PICOJOULE


@dataclass(frozen=True)
class InferenceBreakdown:
    """Per-term decomposition of one inference, all in joules."""

    dram: float          # input fetch from DRAM
    compute: float       # MUAC array work
    weight_moves: float  # weights main SRAM -> local SRAM
    activation_moves: float  # activations through main SRAM

    @property
    def hardware(self) -> float:
        return self.compute + self.weight_moves + self.activation_moves

    @property
    def total(self) -> float:
        return self.dram + self.hardware


def inference_breakdown(hw: HardwareProfile, model: ModelCost,
                        image: ImageGeometry) -> InferenceBreakdown:
    muac = e_muac(hw)
    local = muac          # local-SRAM read/write
    main = 2.0 * muac     # main-SRAM access
    dram = e_dram_access(hw) * image.elements * (hw.full_precision / hw.sram_bits)
    compute = muac * (model.complexity + 3.0 * model.activations)
    spill = local * model.complexity / sqrt(hw.parallelism)
    weight_moves = main * model.size + spill
    activation_moves = 2.0 * main * model.activations + spill
    return InferenceBreakdown(dram=dram, compute=compute,
                              weight_moves=weight_moves,
                              activation_moves=activation_moves)


def inference_energy(hw: HardwareProfile, model: ModelCost,
                     image: ImageGeometry) -> float:
    """Energy of one inference over one input image, in joules."""
    return inference_breakdown(hw, model, image).total


def model_load_energy(hw: HardwareProfile, model: ModelCost) -> float:
    """Energy to load a model's weights from DRAM into main SRAM, in joules.

    One ``sram_bits``-wide access per weight, scaled by the DRAM-to-SRAM
    precision ratio, mirroring the input-fetch term of the inference model.
    """
    return e_dram_access(hw) * model.size * (hw.full_precision / hw.sram_bits)
