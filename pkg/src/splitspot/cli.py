"""Command-line runner: ``splitspot {scan|triple|analyze|full|defaults}``.

Exit codes: 0 success, 1 unexpected library error, otherwise the
``exit_code`` of the raised error class (see ``splitspot.errors``).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis, counting
from .config import EXPERIMENTS, RunConfig, dump_defaults, parse_config, parse_text
from .counting import CountMap
from .errors import ConfigError, OutputError, SplitSpotError

CSV_HEADER = "x_cm,y_cm,value"


def _fmt(x) -> str:
    return f"{x:.6g}"


def atomic_write(path: Path, text: str):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None


def map_to_csv(cmap: CountMap) -> str:
    rows = [CSV_HEADER]
    for j, y in enumerate(cmap.ys):
        for i, x in enumerate(cmap.xs):
            rows.append(f"{_fmt(x)},{_fmt(y)},{_fmt(cmap.values[j, i])}")
    return "\n".join(rows) + "\n"


def read_map_csv(path) -> CountMap:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read map {path}: {exc.strerror}") from None
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ConfigError(f"{path}: expected header {CSV_HEADER!r}", line=1)
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    except ValueError:
        raise ConfigError(f"{path}: malformed CSV row") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise ConfigError(f"{path}: expected three columns")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != data.shape[0]:
        raise ConfigError(f"{path}: points do not form a full rectangular grid")
    values = np.empty((ys.size, xs.size))
    values[np.searchsorted(ys, data[:, 1]), np.searchsorted(xs, data[:, 0])] = data[:, 2]
    return CountMap(xs, ys, values)


def _report(pairs) -> str:
    out = []
    for k, v in pairs:
        if v is None:
            text = "undefined"
        elif isinstance(v, (bool, str, int, np.integer)):
            text = str(v)
        else:
            text = f"{v:.10g}"
        out.append(f"{k} = {text}")
    return "\n".join(out) + "\n"


def run_scan(cfg: RunConfig):
    scene = cfg.scene()
    fixed = counting.default_fixed_detector(
        scene,
        aperture_diameter=cfg["detector.aperture"],
        quantum_efficiency=cfg["detector.efficiency"],
        dark_rate=cfg["detector.dark_rate"],
    )
    result = counting.simulate_scan(
        scene, fixed, cfg.grid(), cfg["scan.pair_rate"], cfg.gates(), cfg["seed"],
        scan_detector=cfg.scan_detector(), workers=cfg["workers"],
    )
    out = cfg.output_dir
    atomic_write(out / "coincidence_map.csv", map_to_csv(result.coincidence_map()))
    atomic_write(out / "singles_map.csv", map_to_csv(result.singles_map()))
    return result


def run_analyze(cfg: RunConfig, cmap: CountMap | None = None):
    if cmap is None:
        src = cfg["analyze.input"] or cfg.output_dir / "coincidence_map.csv"
        cmap = read_map_csv(src)
    scene = cfg.scene()
    fit = analysis.fit_two_spots(cmap)
    l_est = analysis.infer_l(fit.delta_y0, scene.ring_radius, scene.ring_theta, scene.k_s, scene.k_P, scene.pump.z_R)
    pairs = []
    for name, spot in zip(("spot_top", "spot_bottom"), fit.spots):
        for fld in ("amplitude", "x", "y", "sigma_x", "sigma_y"):
            unit = "" if fld == "amplitude" else "_cm"
            pairs.append((f"{name}.{fld}{unit}", getattr(spot, fld)))
    pairs += [
        ("offset", fit.offset),
        ("residual", fit.residual),
        ("iterations", fit.iterations),
        ("delta_y0_cm", fit.delta_y0),
        ("grid_step_cm", cmap.step),
        ("ring_radius_cm", scene.ring_radius),
        ("theta0_rad", scene.ring_theta),
        ("inferred_l", l_est),
        ("rounded_l", int(round(l_est))),
    ]
    atomic_write(cfg.output_dir / "fit.txt", _report(pairs))
    return fit, l_est


def run_triple(cfg: RunConfig):
    scene = cfg.scene()
    gates = cfg.gates()
    trig, top, bot = cfg.triple_detectors(scene)
    setup = counting.calibrate_triple(scene, trig, top, bot, cfg.targets(), gates)
    record = counting.simulate_triple(
        cfg["triple.model"], scene, setup.trig, setup.top, setup.bot, setup.pair_rate, gates,
        cfg["triple.duration"], cfg["seed"],
    )
    summary = analysis.summarize_rates(record, gates.effective_window)
    atomic_write(cfg.output_dir / "rates.txt", _report(summary.items()))
    return summary


def run(cfg: RunConfig) -> int:
    exp = cfg.experiment
    if exp is None:
        raise ConfigError("experiment selector required (scan, triple, analyze or full)", "experiment")
    if exp == "scan":
        run_scan(cfg)
    elif exp == "analyze":
        run_analyze(cfg)
    elif exp == "triple":
        run_triple(cfg)
    else:
        result = run_scan(cfg)
        run_analyze(cfg, result.coincidence_map())
        run_triple(cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitspot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", type=Path, help="flat key = value config file (default: built-in defaults)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", type=Path, help="override output.dir")
        p.add_argument("--workers", type=int, help="threads for the scan grid")
    sub.add_parser("defaults", help="print every config key with its default")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "defaults":
        sys.stdout.write(dump_defaults())
        return 0
    try:
        cfg = parse_config(args.config) if args.config else parse_text("")
        if cfg.experiment not in (None, args.command):
            raise ConfigError(f"config selects {cfg.experiment!r} but the command is {args.command!r}",
                              "experiment", cfg.lines.get("experiment"))
        updates = {"experiment": args.command}
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be >= 0", "seed")
            updates["seed"] = args.seed
        if args.out is not None:
            updates["output.dir"] = str(args.out)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("workers must be >= 1", "workers")
            updates["workers"] = args.workers
        return run(cfg.with_values(**updates))
    except SplitSpotError as exc:
        print(f"splitspot: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
