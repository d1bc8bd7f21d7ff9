"""Command-line surface: simulation, analysis, sweeps, optimization, comparison.

Common flags: ``--config`` (JSON document), repeated ``--set path=value``
overrides mirroring config field paths, ``--seed``, ``--out`` (output
directory), ``--format csv|svg|both``. All file output is deterministic for
a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analytic import expected_sifi_exact, mcmc_expected_sifi
from .config import (ConfigError, ScenarioConfig, apply_overrides,
                     dump_config, load_config)
from .energy import (communication_energy, computation_energy,
                     expected_total_energy, p_th)
from .experiments import (SweepSpec, compare_schemes, optimize,
                          render_csv, sweep_sifi_vs_rate)
from .hardware import e_dram_access, e_muac, inference_breakdown
from .sim import simulate
from .svgplot import line_chart

__all__ = ["main", "build_parser"]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None,
                        help="path to a JSON configuration document")
    parser.add_argument("--set", action="append", default=[], dest="overrides",
                        metavar="PATH=VALUE",
                        help="override one config field, e.g. radio.rate=2e5")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None,
                        help="directory for output files (default: stdout only)")
    parser.add_argument("--format", choices=("csv", "svg", "both"),
                        default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecopull",
        description="Energy and retrieval-quality toolkit for TinyML-filtered "
                    "IoT image collection over slotted ALOHA")
    sub = parser.add_subparsers(dest="command", required=True)

    cmd = sub.add_parser("print-config",
                         help="dump the fully resolved configuration")
    _add_common(cmd)

    cmd = sub.add_parser("simulate", help="Monte Carlo protocol simulation")
    _add_common(cmd)
    cmd.add_argument("--rounds", type=int, default=10_000)
    cmd.add_argument("--per-round", action="store_true",
                     help="emit one CSV row per round before the aggregate")

    cmd = sub.add_parser("analyze", help="expected score, exact or sampled")
    _add_common(cmd)
    cmd.add_argument("--mode", choices=("exact", "mcmc"), default="mcmc")
    cmd.add_argument("--samples", type=int, default=10_000,
                     help="chain length for mcmc mode")
    cmd.add_argument("--burn-in", type=int, default=0)
    cmd.add_argument("--hastings", action="store_true",
                     help="apply the proposal-asymmetry correction")
    cmd.add_argument("--trace", action="store_true",
                     help="emit the per-step chain trace as CSV")

    cmd = sub.add_parser("sweep-sifi", help="score versus compression rate")
    _add_common(cmd)
    cmd.add_argument("--grid", default="1.0:4.8:0.1",
                     help="rate grid start:stop:step, or comma-separated values")
    cmd.add_argument("--mode", choices=("mcmc", "simulate", "exact", "both"),
                     default="mcmc")
    cmd.add_argument("--rounds", type=int, default=10_000)
    cmd.add_argument("--samples", type=int, default=10_000)

    cmd = sub.add_parser("optimize",
                         help="minimum-energy parameters under a score floor")
    _add_common(cmd)
    cmd.add_argument("--gamma-th", type=float, default=0.8)
    cmd.add_argument("--images", type=int, default=None,
                     help="override images per device for the search")
    cmd.add_argument("--samples", type=int, default=10_000)
    cmd.add_argument("--full-grid", action="store_true",
                     help="emit every grid point, not just the optimum")

    cmd = sub.add_parser("compare",
                         help="energy-saving ratios versus the baseline")
    _add_common(cmd)
    cmd.add_argument("--gamma-th", type=float, default=0.8)
    cmd.add_argument("--n-grid", default="5:100:5",
                     help="library-size grid start:stop:step or comma list")
    cmd.add_argument("--samples", type=int, default=10_000)

    cmd = sub.add_parser("energy-breakdown",
                         help="per-term inference and device energy as CSV")
    _add_common(cmd)

    cmd = sub.add_parser("expected-energy",
                         help="expected device energy over a parameter grid")
    _add_common(cmd)
    cmd.add_argument("--vth-grid", default="0.5:0.8:0.05")
    cmd.add_argument("--r-grid", default="1.0:2.0:0.25")

    return parser


def _load(args) -> ScenarioConfig:
    spec = {}
    if args.config:
        spec = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(spec, dict):
            raise ConfigError("configuration document must be a JSON object")
    apply_overrides(spec, args.overrides)
    return load_config(spec)


def _parse_grid(text: str, integer: bool = False) -> list:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError(f"grid step must be positive in {text!r}")
        values = []
        k = 0
        while True:
            value = round(start + k * step, 10)
            if value > stop + 1e-9:
                break
            values.append(value)
            k += 1
    else:
        values = [float(p) for p in text.split(",") if p.strip()]
    if integer:
        values = [int(round(v)) for v in values]
    return values


def _emit(args, name: str, csv_text: Optional[str] = None,
          svg_text: Optional[str] = None) -> None:
    if csv_text is not None and args.format in ("csv", "both"):
        if args.out:
            path = Path(args.out) / f"{name}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(csv_text, encoding="utf-8")
            print(f"wrote {path}")
        else:
            sys.stdout.write(csv_text)
    if svg_text is not None and args.format in ("svg", "both"):
        if args.out:
            path = Path(args.out) / f"{name}.svg"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(svg_text, encoding="utf-8")
            print(f"wrote {path}")
        else:
            sys.stdout.write(svg_text)


def _cmd_print_config(args) -> int:
    cfg = _load(args)
    text = dump_config(cfg) + "\n"
    if args.out:
        path = Path(args.out) / "config.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    aggregate = simulate(cfg, args.rounds, args.seed,
                         keep_rounds=args.per_round)
    header = ["row", "round", "sifi", "sifi_stderr", "mean_device_energy",
              "energy_stderr", "delivered", "actual_relevant", "frames"]
    rows = []
    if aggregate.rounds_detail:
        for stat in aggregate.rounds_detail:
            rows.append(["round", stat.index, stat.sifi, "",
                         stat.mean_device_energy, "", stat.delivered,
                         stat.actual_relevant, stat.frames])
    rows.append(["aggregate", aggregate.rounds, aggregate.mean_sifi,
                 aggregate.sifi_stderr, aggregate.mean_total_energy,
                 aggregate.total_energy_stderr, aggregate.mean_delivered,
                 aggregate.mean_actual_relevant, aggregate.mean_frames])
    _emit(args, "simulate", csv_text=render_csv(header, rows))
    return 0


def _cmd_analyze(args) -> int:
    cfg = _load(args)
    if args.mode == "exact":
        estimate = expected_sifi_exact(cfg)
        header = ["mode", "sifi", "samples", "acceptance_rate"]
        rows = [["exact", estimate, "", ""]]
        _emit(args, "analyze", csv_text=render_csv(header, rows))
        return 0
    result = mcmc_expected_sifi(cfg, args.samples, args.seed,
                                burn_in=args.burn_in,
                                hastings=args.hastings,
                                keep_trace=args.trace)
    header = ["mode", "sifi", "samples", "acceptance_rate"]
    rows = [["mcmc", result.estimate, result.samples,
             result.acceptance_rate]]
    _emit(args, "analyze", csv_text=render_csv(header, rows))
    if args.trace and result.success_trace is not None:
        trace_rows = [[i, v] for i, v in enumerate(result.success_trace)]
        _emit(args, "analyze_trace",
              csv_text=render_csv(["step", "success_probability"],
                                  trace_rows))
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    grid = tuple(_parse_grid(args.grid))
    spec = SweepSpec(config=cfg, grid=grid, mode=args.mode,
                     rounds=args.rounds, samples=args.samples,
                     seed=args.seed)
    rows = sweep_sifi_vs_rate(spec)
    header = ["rate", "slots", "sifi_mcmc", "sifi_sim", "sim_stderr",
              "sifi_exact"]
    table = [[r.rate, r.slots, r.sifi_mcmc, r.sifi_sim, r.sim_stderr,
              r.sifi_exact] for r in rows]
    svg = None
    series = []
    if any(r.sifi_mcmc is not None for r in rows):
        series.append(("analysis", [r.rate for r in rows],
                       [r.sifi_mcmc for r in rows]))
    if any(r.sifi_sim is not None for r in rows):
        series.append(("simulation", [r.rate for r in rows],
                       [r.sifi_sim for r in rows]))
    if any(r.sifi_exact is not None for r in rows):
        series.append(("exact", [r.rate for r in rows],
                       [r.sifi_exact for r in rows]))
    if series:
        svg = line_chart(series, title="Retrieval score vs compression rate",
                         x_label="compression rate [bpp]", y_label="score")
    _emit(args, "sweep_sifi", csv_text=render_csv(header, table),
          svg_text=svg)
    return 0


def _cmd_optimize(args) -> int:
    cfg = _load(args)
    result = optimize(cfg, args.gamma_th, images_per_device=args.images,
                      samples=args.samples, seed=args.seed)
    header = ["feasible", "relevance_threshold", "rate", "slots", "sifi",
              "expected_energy", "gamma_th"]
    if result.feasible:
        slots = next(p.slots for p in result.grid
                     if p.relevance_threshold == result.relevance_threshold
                     and p.rate == result.rate)
        rows = [[True, result.relevance_threshold, result.rate, slots,
                 result.sifi, result.energy, result.gamma_th]]
    else:
        rows = [[False, "", "", "", "", "", result.gamma_th]]
        print("no grid point satisfies the score constraint",
              file=sys.stderr)
    _emit(args, "optimize", csv_text=render_csv(header, rows))
    if args.full_grid:
        grid_header = ["relevance_threshold", "rate", "slots", "sifi",
                       "expected_energy", "feasible"]
        grid_rows = [[p.relevance_threshold, p.rate, p.slots, p.sifi,
                      p.energy, p.feasible] for p in result.grid]
        _emit(args, "optimize_grid",
              csv_text=render_csv(grid_header, grid_rows))
    return 0


def _cmd_compare(args) -> int:
    cfg = _load(args)
    n_grid = _parse_grid(args.n_grid, integer=True)
    result = compare_schemes(cfg, n_grid, args.gamma_th,
                             samples=args.samples, seed=args.seed)
    for line in result.assumptions.describe():
        print(f"# assumption {line}")
    header = ["images_per_device", "eta_ecopull", "eta_tinyairnet",
              "relevance_threshold", "rate", "sifi", "energy_ecopull",
              "energy_tinyairnet", "energy_baseline", "feasible"]
    rows = [[r.images_per_device, r.eta_ecopull, r.eta_tinyairnet,
             r.relevance_threshold, r.rate, r.sifi, r.energy_ecopull,
             r.energy_tinyairnet, r.energy_baseline, r.feasible]
            for r in result.rows]
    feasible = [r for r in result.rows if r.feasible]
    svg = None
    if feasible:
        ns = [r.images_per_device for r in feasible]
        svg = line_chart(
            [("ecopull", ns, [r.eta_ecopull for r in feasible]),
             ("filter-only", ns, [r.eta_tinyairnet for r in feasible]),
             ("baseline", ns, [1.0] * len(ns))],
            title="Energy saving vs library size",
            x_label="images per device", y_label="energy ratio")
    _emit(args, "compare", csv_text=render_csv(header, rows), svg_text=svg)
    return 0


def _cmd_energy_breakdown(args) -> int:
    cfg = _load(args)
    header = ["model", "e_muac", "e_dram_access", "dram", "compute",
              "weight_moves", "activation_moves", "total"]
    rows = []
    for name, hw, model in (("behavior", cfg.behavior_hw, cfg.behavior_model),
                            ("compressor", cfg.compressor_hw,
                             cfg.compressor_model)):
        terms = inference_breakdown(hw, model, cfg.image)
        rows.append([name, e_muac(hw), e_dram_access(hw), terms.dram,
                     terms.compute, terms.weight_moves,
                     terms.activation_moves, terms.total])
    _emit(args, "energy_breakdown", csv_text=render_csv(header, rows))

    device_header = ["quantity", "joules"]
    pth = p_th(cfg.relevance_threshold, cfg.model_noise,
               cfg.truth_distribution)
    device_rows = [
        ["computation_all_relevant",
         computation_energy(cfg, cfg.images_per_device)],
        ["computation_none_relevant", computation_energy(cfg, 0)],
        ["communication_none_relevant", communication_energy(cfg, 0)],
        ["expected_total", expected_total_energy(cfg)],
        ["pass_probability", pth],
    ]
    _emit(args, "device_energy",
          csv_text=render_csv(device_header, device_rows))
    return 0


def _cmd_expected_energy(args) -> int:
    cfg = _load(args)
    from dataclasses import replace as _replace
    header = ["relevance_threshold", "rate", "expected_energy"]
    rows = []
    for vth in _parse_grid(args.vth_grid):
        for rate in _parse_grid(args.r_grid):
            point = _replace(cfg, relevance_threshold=vth,
                             compression_rate=rate)
            rows.append([vth, rate, expected_total_energy(point)])
    _emit(args, "expected_energy", csv_text=render_csv(header, rows))
    return 0


_COMMANDS = {
    "print-config": _cmd_print_config,
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "sweep-sifi": _cmd_sweep,
    "optimize": _cmd_optimize,
    "compare": _cmd_compare,
    "energy-breakdown": _cmd_energy_breakdown,
    "expected-energy": _cmd_expected_energy,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    from .analytic import EnumerationBudgetError
    from .energy import QuadratureError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except EnumerationBudgetError as exc:
        print(f"enumeration too large: {exc}; use --mode mcmc",
              file=sys.stderr)
        return 3
    except QuadratureError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
