import pytest

from ecopull import (BaselineAssumptions, SchemeKind, baseline_energy,
                     energy_saving_ratio, expected_total_energy, load_config,
                     p_th, tinyairnet_energy)


def test_scheme_kinds_are_closed():
    assert {kind.value for kind in SchemeKind} == {"ecopull", "tinyairnet",
                                                   "baseline"}


def test_baseline_energy_single_image():
    cfg = load_config({"images_per_device": 1})
    # one PNG-sized packet at 4.86 bpp over 640x480 pixels
    assert baseline_energy(cfg) == pytest.approx(1.61243136, rel=1e-9)


def test_baseline_energy_linear_in_library_size():
    one = baseline_energy(load_config({"images_per_device": 1}))
    for n in (2, 10, 100):
        cfg = load_config({"images_per_device": n})
        assert baseline_energy(cfg) == pytest.approx(n * one, rel=1e-12)


def test_baseline_has_no_ml_terms():
    cfg = load_config({"images_per_device": 10})
    assert baseline_energy(cfg) == pytest.approx(
        10 * cfg.radio.tx_power * 4.86 * 640 * 480 / cfg.radio.rate,
        rel=1e-12)
    with_rx = baseline_energy(cfg, BaselineAssumptions(baseline_query_rx=True))
    assert with_rx > baseline_energy(cfg)


def test_tinyairnet_between_its_endpoints():
    cfg = load_config({"images_per_device": 20})
    pth = p_th(cfg.relevance_threshold, cfg.model_noise,
               cfg.truth_distribution)
    base = baseline_energy(cfg)
    tiny = tinyairnet_energy(cfg)
    fixed = tinyairnet_energy(
        cfg, BaselineAssumptions(png_rate=1e-300))  # transmissions off
    assert tiny == pytest.approx(fixed + pth * base, rel=1e-6)


def test_tinyairnet_term_toggles():
    cfg = load_config({"images_per_device": 10})
    everything = tinyairnet_energy(cfg)
    for flag in ("filter_inference", "filter_model_load", "filter_model_rx",
                 "filter_query_rx"):
        reduced = tinyairnet_energy(cfg, BaselineAssumptions(**{flag: False}))
        assert reduced < everything


def test_saving_ratio():
    assert energy_saving_ratio(3.0, 3.0) == 1.0
    assert energy_saving_ratio(1.0, 4.0) == 0.25
    with pytest.raises(ValueError, match="baseline"):
        energy_saving_ratio(1.0, 0.0)


def test_reference_configuration_ordering_at_larger_libraries():
    # with enough images the filtered schemes beat sending everything,
    # and latent transmission beats PNG transmission
    for n in (30, 60, 100):
        cfg = load_config({"images_per_device": n,
                           "relevance_threshold": 0.6,
                           "compression_rate": 1.2})
        eco = expected_total_energy(cfg)
        tiny = tinyairnet_energy(cfg)
        base = baseline_energy(cfg)
        assert eco < tiny < base


def test_scheme_energies_affine_in_library_size():
    def energies(n):
        cfg = load_config({"images_per_device": n})
        return (expected_total_energy(cfg), tinyairnet_energy(cfg),
                baseline_energy(cfg))

    e10, e20, e30 = energies(10), energies(20), energies(30)
    for a, b, c in zip(e10, e20, e30):
        assert c - b == pytest.approx(b - a, rel=1e-6)
