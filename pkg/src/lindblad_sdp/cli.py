"""Command-line driver: sweep, verify, export-sdpa, info."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import LindbladSdpError
from .pipeline import (
    export_point_sdpa,
    parse_config,
    physics_hash,
    physics_key,
    run_sweep,
    select_point,
    verify_dump,
)


def _parse_selector(text: str) -> dict:
    out = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ValueError(f"selector entry {chunk!r} is not key=value")
        key, value = chunk.split("=", 1)
        key = key.strip()
        if key == "geometry":
            out[key] = tuple(int(v) for v in value.split("-"))
        else:
            out[key] = float(value)
    return out


def _apply_overrides(config, args):
    updates = {}
    if getattr(args, "delta_tol", None) is not None:
        updates["delta_tol"] = args.delta_tol
    if getattr(args, "free_trace", False):
        updates["free_trace"] = True
    if getattr(args, "parallelism", None) is not None:
        updates["parallelism"] = args.parallelism
    if getattr(args, "backend", None) is not None:
        updates["backend"] = args.backend
    return replace(config, **updates) if updates else config


def cmd_sweep(args) -> int:
    config = _apply_overrides(parse_config(args.config), args)
    result = run_sweep(config, output_dir=args.output_dir)
    n_rows = len(result.rows)
    print(f"wrote {result.csv_path} ({n_rows} rows, {result.n_failed} failed)")
    for path in result.candidate_paths:
        print(f"candidate dump: {path}")
    return 1 if result.n_failed else 0


def cmd_verify(args) -> int:
    config = parse_config(args.config)
    report = verify_dump(config, args.dump)
    print(report.describe())
    return 0 if report.passed else 1


def cmd_export_sdpa(args) -> int:
    config = _apply_overrides(parse_config(args.config), args)
    selector = _parse_selector(args.select) if args.select else None
    index, point = select_point(config, selector, args.index)
    text = export_point_sdpa(config, point, args.objective)
    out = Path(args.out) if args.out else Path(f"point{index:04d}_{args.objective}.dat-s")
    out.write_text(text)
    print(f"wrote {out} (grid point {index}, objective {args.objective})")
    return 0


def cmd_info(args) -> int:
    config = parse_config(args.config)
    chain = config.chain
    grid = config.grid()
    print(f"chain: N={chain.n_qubits} (N_L={chain.n_left}, N_M={chain.n_mid}, "
          f"N_R={chain.n_right}), omega0={chain.onsite_energy}, "
          f"eps0={chain.energy_bias}, g={chain.coupling}")
    print(f"dims: d={chain.dim} = {chain.dim_left} x {chain.dim_mid} x {chain.dim_right}")
    print(f"baths: beta_L={config.beta_left}, beta_R={config.beta_right}, "
          f"gammas={config.gammas}, omega_c={config.omega_c}, mu={config.mu}")
    print(f"objectives: {', '.join(config.objectives)}  "
          f"(t_L={config.t_left}, t_R={config.t_right}, "
          f"delta_tol={config.delta_tol}, free_trace={config.free_trace})")
    for axis in config.axes:
        values = ", ".join(str(v) for v in axis.values)
        print(f"axis {axis.param}: [{values}]")
    print(f"grid points: {len(grid)}")
    if grid:
        print(f"first-point physics hash: {physics_hash(physics_key(config, grid[0]))}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lindblad-sdp",
        description=(
            "Decide, via semidefinite programming, whether a locality-"
            "preserving Lindblad description can reproduce the leading-order "
            "steady state of a dissipative qubit chain."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a parameter sweep from a config file")
    sweep.add_argument("--config", required=True, help="YAML sweep config")
    sweep.add_argument("--output-dir", default=None, help="override output directory")
    sweep.add_argument("--parallelism", type=int, default=None, help="worker processes")
    sweep.add_argument("--delta-tol", type=float, default=None, dest="delta_tol",
                       help="override feasibility tolerance")
    sweep.add_argument("--free-trace", action="store_true",
                       help="drop the trace equality on the Kossakowski matrices")
    sweep.add_argument("--backend", default=None, choices=["clarabel", "scs"])
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="re-audit a stored candidate dump")
    verify.add_argument("--dump", required=True, help="candidate dump path")
    verify.add_argument("--config", required=True, help="config that produced it")
    verify.set_defaults(func=cmd_verify)

    export = sub.add_parser("export-sdpa", help="export one grid point as SDPA sparse text")
    export.add_argument("--config", required=True)
    export.add_argument("--select", default=None,
                        help="comma-separated key=value pairs picking one grid point")
    export.add_argument("--index", type=int, default=None, help="grid point index")
    export.add_argument("--objective", default="pop", choices=["pop", "pop_coh"])
    export.add_argument("--out", default=None, help="output path")
    export.add_argument("--delta-tol", type=float, default=None, dest="delta_tol")
    export.add_argument("--free-trace", action="store_true")
    export.set_defaults(func=cmd_export_sdpa)

    info = sub.add_parser("info", help="summarize a config and its grid")
    info.add_argument("--config", required=True)
    info.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LindbladSdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
