"""Command-line runner: one subcommand per experiment, CSV out, manifest per run."""

from __future__ import annotations

import argparse
import csv
import os
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, format_value, from_mapping, load, serialize
from .errors import ConfigError, NfextError

SUBCOMMANDS = ("stationary-points", "profile", "ambiguity", "mismatch-sweep", "equipotential",
               "synthesize", "validate")


def threads() -> int:
    try:
        return max(1, int(os.environ.get("NFEXT_THREADS", "1")))
    except ValueError:
        return 1


def version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_value(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_manifest(out: Path, command: str, argv, config, elapsed: float, files):
    text = [f"command = {command}", f"argv = {' '.join(argv)}", f"version = {version_string()}",
            f"wall_time_s = {elapsed:.3f}", "outputs = " + ", ".join(files), "", "[config]",
            serialize(config)]
    (out / f"{command}.manifest.txt").write_text("\n".join(text))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _grid(text: str) -> np.ndarray:
    """``a:b:n`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return np.linspace(float(a), float(b), int(n))
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def _array(text: str):
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad array size {text!r}") from exc
    if len(dims) not in (1, 2) or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad array size {text!r}")
    return dims


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("scenario")
    g.add_argument("--config", type=Path, help="key = value scenario file")
    g.add_argument("--array", type=_array, help="N (linear) or NyxNz (planar)")
    for f in fields(ScenarioConfig):
        flag = "--" + f.name.replace("_", "-")
        kind = {"int": int, "float": float}.get(f.type, str)
        g.add_argument(flag, dest=f"cfg_{f.name}", type=kind, default=None,
                       metavar=f.name.upper())
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="nfext", description=__doc__)
    parser.add_argument("--version", action="version", version=version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stationary-points", parents=[parent], help="specular points of all pairs")
    sp.add_argument("--targets", default="plate,sphere,cylinder")

    sub.add_parser("profile", parents=[parent], help="range profile and lobe metrics")
    sub.add_parser("ambiguity", parents=[parent], help="range-angle ambiguity map")

    ms = sub.add_parser("mismatch-sweep", parents=[parent], help="point-model bias maps")
    ms.add_argument("--axis1", required=True, choices=("R", "rho", "delta", "sub_spacing"))
    ms.add_argument("--grid1", required=True, type=_grid)
    ms.add_argument("--axis2", choices=("R", "rho", "delta", "sub_spacing"))
    ms.add_argument("--grid2", type=_grid)
    ms.add_argument("--estimator", choices=("genie", "ml"), default="genie")
    ms.add_argument("--relative", action="store_true")

    eq = sub.add_parser("equipotential", parents=[parent], help="plate constant-bias curve")
    eq.add_argument("--alpha", type=float, required=True)
    eq.add_argument("--delta-grid", type=_grid, default=_grid("0.01:0.3:30"))

    sub.add_parser("synthesize", parents=[parent], help="sampled received signals")

    va = sub.add_parser("validate", parents=[parent], help="oracle cross-checks")
    va.add_argument("--quick", action="store_true", help="skip the surface quadratures")
    return parser


def config_from_args(args) -> ScenarioConfig:
    base = load(args.config) if args.config else ScenarioConfig()
    changes = {f.name: getattr(args, f"cfg_{f.name}") for f in fields(ScenarioConfig)
               if getattr(args, f"cfg_{f.name}") is not None}
    if args.array:
        if len(args.array) == 1:
            changes.update(layout="linear", n=args.array[0], n_y=1)
        else:
            changes.update(layout="planar", n_y=args.array[0], n=args.array[1])
    return from_mapping(changes, base)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_stationary_points(cfg, args, out):
    from .spa import spa_terms
    rows = []
    for target in [t.strip() for t in args.targets.split(",") if t.strip()]:
        c = cfg.replace(target=target)
        surface = c.true_surface()
        layout = c.antenna_layout()
        ti, ri = layout.pairs()
        t = spa_terms(surface, layout.positions[ti], layout.positions[ri], c)
        for i in range(len(ti)):
            rows.append([target, ti[i], ri[i], *t.point[i], *t.local_yz[i], t.total_distance[i],
                         t.det[i], t.signature[i], t.on_surface[i]])
    name = "stationary_points.csv"
    write_csv(out / name, ["target", "pair_tx", "pair_rx", "x", "y", "z", "y_local", "z_local",
                           "total_distance", "det", "signature", "on_surface"], rows)
    return [name]


def cmd_profile(cfg, args, out):
    from .estimators import lobe_metrics, range_profile
    prof = range_profile(cfg)
    write_csv(out / "profile.csv", ["r_tilde", "value_db"], zip(prof.axis, prof.values))
    m = lobe_metrics(prof)
    write_csv(out / "metrics.csv", ["width_3db", "psl_db", "argmax"],
              [[m["width_3db"], m["peak_sidelobe_db"], m["argmax"]]])
    return ["profile.csv", "metrics.csv"]


def cmd_ambiguity(cfg, args, out):
    from .estimators import ambiguity_map
    amb = ambiguity_map(cfg)
    rows = ([r, a, amb.values[i, j]] for i, r in enumerate(amb.ranges)
            for j, a in enumerate(amb.angles))
    write_csv(out / "ambiguity.csv", ["r_tilde", "angle_rad", "value_db"], rows)
    return ["ambiguity.csv"]


def cmd_mismatch_sweep(cfg, args, out):
    from .mismatch import _apply, bias_cell
    g2 = args.grid2 if args.axis2 else np.array([np.nan])
    if args.axis2 and args.grid2 is None:
        raise ConfigError("--axis2 needs --grid2")
    cells = []
    for v1 in args.grid1:
        c1 = _apply(cfg, args.axis1, float(v1))
        for v2 in g2:
            cells.append((v1, v2, c1 if not args.axis2 else _apply(c1, args.axis2, float(v2))))
    with ThreadPoolExecutor(threads()) as pool:
        values = list(pool.map(lambda c: bias_cell(c[2], args.estimator, args.relative), cells))
    col = "bias_rel" if args.relative else "bias_m"
    rows = ([v1, "" if np.isnan(v2) else v2, b] for (v1, v2, _), b in zip(cells, values))
    write_csv(out / "mismatch.csv", ["axis1", "axis2", col], rows)
    return ["mismatch.csv"]


def cmd_equipotential(cfg, args, out):
    from .mismatch import equipotential_plate
    rows = [[d, equipotential_plate(args.alpha, cfg.n, float(d))] for d in args.delta_grid]
    write_csv(out / "equipotential.csv", ["delta", "R"], rows)
    return ["equipotential.csv"]


def cmd_synthesize(cfg, args, out):
    from .estimators import model_for
    from .synth import TimeGrid, Waveform, synthesize_matrix
    m = model_for(cfg, "extended")
    amp, dly = m.terms([cfg.range_m], [cfg.azimuth], [cfg.elevation])
    grid = TimeGrid.covering(dly[0], cfg.bandwidth, cfg.oversample)
    ti, ri = m.layout.pairs()
    u = synthesize_matrix(amp[0], dly[0], Waveform(cfg.bandwidth), grid, 1.0, cfg.noise_var,
                          cfg.seed, list(zip(ti.tolist(), ri.tolist())))
    t = grid.times
    rows = ([ti[p], ri[p], t[i], u[p, i].real, u[p, i].imag] for p in range(len(ti))
            for i in range(grid.n))
    write_csv(out / "signals.csv", ["pair_tx", "pair_rx", "t", "re", "im"], rows)
    return ["signals.csv"]


def cmd_validate(cfg, args, out):
    from .validation import run_checks
    results = run_checks(cfg, quick=args.quick)
    write_csv(out / "validate.csv", ["check", "value", "tolerance", "passed"],
              [[r.name, r.value, r.tolerance, r.passed] for r in results])
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3g} (tol {r.tolerance:.3g})")
    return ["validate.csv"], all(r.passed for r in results)


COMMANDS = {
    "stationary-points": cmd_stationary_points,
    "profile": cmd_profile,
    "ambiguity": cmd_ambiguity,
    "mismatch-sweep": cmd_mismatch_sweep,
    "equipotential": cmd_equipotential,
    "synthesize": cmd_synthesize,
    "validate": cmd_validate,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"nfext: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        result = COMMANDS[args.command](cfg, args, out)
    except NfextError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    files, ok = result if isinstance(result, tuple) else (result, True)
    write_manifest(out, args.command, argv, cfg, time.perf_counter() - start, files)
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
