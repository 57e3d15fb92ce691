"""Command-line front end.

Subcommands::

    fuzzypid simulate      [--config F] [--out DIR] [--csv] [--svg] [--controller K] [--dt S] [--setpoint V]
    fuzzypid compare       [--config F] [--out DIR] [--svg] ...
    fuzzypid gains-surface [--config F] [--out DIR]
    fuzzypid metrics TRACE.csv

Config files hold flat ``key = value`` lines; ``#`` starts a comment. See
``CONFIG_KEYS`` for the accepted keys and README.md for their meaning.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import simkit
from .fuzzy import DEFAULT_GEOMETRY, FisGeometry, gains_from_error, load_rule_tables
from .pid import PidConfig, PidGains
from .plant import MotorParams

log = logging.getLogger("fuzzypid")


class ConfigError(ValueError):
    pass


def _float(v):
    x = float(v)
    if not math.isfinite(x):
        raise ValueError(f"{v!r} is not finite")
    return x


def _positive(v):
    x = _float(v)
    if not x > 0:
        raise ValueError(f"must be > 0, got {x!r}")
    return x


def _nonneg(v):
    x = _float(v)
    if x < 0:
        raise ValueError(f"must be >= 0, got {x!r}")
    return x


def _floats(n):
    def conv(v):
        parts = [p for p in v.replace(",", " ").split()]
        if n is not None and len(parts) != n:
            raise ValueError(f"expected {n} numbers, got {len(parts)}")
        return tuple(_float(p) for p in parts)
    return conv


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


def _grid_n(v):
    x = int(v)
    if x < 2:
        raise ValueError(f"must be >= 2, got {x}")
    return x


def _resolution(v):
    x = int(v)
    if x < 101:
        raise ValueError(f"must be >= 101, got {x}")
    return x


def _filter_coeff(v):
    x = float(v)
    if not x > 0:
        raise ValueError(f"must be > 0 (inf disables the filter), got {x!r}")
    return x


def _controller(v):
    kinds = _controllers(v)
    if len(kinds) != 1:
        raise ValueError("exactly one controller expected")
    return kinds[0]


def _controllers(v):
    kinds = tuple(p for p in v.replace(",", " ").split())
    if not kinds:
        raise ValueError("empty controller list")
    for k in kinds:
        if k not in simkit.CONTROLLERS:
            raise ValueError(f"unknown controller {k!r}")
    return kinds


# key -> (converter, default)
CONFIG_KEYS = {
    "plant.kt": (_positive, MotorParams.kt),
    "plant.kb": (_positive, MotorParams.kb),
    "plant.ra": (_positive, MotorParams.ra),
    "plant.la": (_positive, MotorParams.la),
    "plant.b": (_positive, MotorParams.b),
    "plant.j": (_positive, MotorParams.j),
    "pid.kp": (_nonneg, PidGains.kp),
    "pid.ki": (_nonneg, PidGains.ki),
    "pid.kd": (_nonneg, PidGains.kd),
    "pid.n_filter": (_filter_coeff, PidConfig.n_filter),
    "pid.u_min": (_float, None),
    "pid.u_max": (_float, None),
    "sim.controller": (_controller, "pid"),
    "sim.setpoint": (_float, 2000.0),
    "sim.dt": (_positive, 1e-3),
    "sim.duration": (_positive, None),
    "sim.start_at_rest": (_bool, True),
    "compare.controllers": (_controllers, simkit.CONTROLLERS),
    "fuzzy.e.universe": (_floats(2), DEFAULT_GEOMETRY.e_universe),
    "fuzzy.e.peaks": (_floats(5), DEFAULT_GEOMETRY.e_peaks),
    "fuzzy.e.scale": (_float, DEFAULT_GEOMETRY.e_scale),
    "fuzzy.de.universe": (_floats(2), DEFAULT_GEOMETRY.de_universe),
    "fuzzy.de.peaks": (_floats(5), DEFAULT_GEOMETRY.de_peaks),
    "fuzzy.de.scale": (_float, DEFAULT_GEOMETRY.de_scale),
    "fuzzy.kp.peaks": (_floats(7), DEFAULT_GEOMETRY.kp_peaks),
    "fuzzy.ki.peaks": (_floats(7), DEFAULT_GEOMETRY.ki_peaks),
    "fuzzy.kd.peaks": (_floats(7), DEFAULT_GEOMETRY.kd_peaks),
    "fuzzy.resolution": (_resolution, DEFAULT_GEOMETRY.resolution),
    "fuzzy.rules": (str.strip, None),
    "grid.n": (_grid_n, 41),
    "out.dir": (str.strip, "out"),
    "out.csv": (_bool, True),
    "out.svg": (_bool, False),
    "out.report": (_bool, True),
}


@dataclass(frozen=True)
class RunManifest:
    configs: tuple[simkit.SimConfig, ...]
    out_dir: Path = Path("out")
    emit_csv: bool = True
    emit_svg: bool = False
    emit_report: bool = True
    grid_n: int = 41
    rules_path: str | None = None

    def __post_init__(self):
        if not (self.emit_csv or self.emit_svg or self.emit_report):
            raise ConfigError("at least one of out.csv, out.svg, out.report must be set")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into converted values (defaults filled in)."""
    values = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: malformed line, expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        conv, _ = CONFIG_KEYS[key]
        try:
            values[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    values["_lines"] = seen
    return values


def manifest_from_values(values: dict, source: str = "<config>") -> RunManifest:
    lines = values.get("_lines", {})

    def fail(keys, exc):
        where = next((f"{source}:{lines[k]}: " for k in keys if k in lines), f"{source}: ")
        raise ConfigError(f"{where}{', '.join(keys)}: {exc}") from None

    v = values
    try:
        plant = MotorParams(*(v[f"plant.{n}"] for n in ("kt", "kb", "ra", "la", "b", "j")))
    except ValueError as exc:
        fail([f"plant.{n}" for n in ("kt", "kb", "ra", "la", "b", "j")], exc)
    try:
        gains = PidGains(v["pid.kp"], v["pid.ki"], v["pid.kd"])
    except ValueError as exc:
        fail(["pid.kp", "pid.ki", "pid.kd"], exc)
    clamp = None
    if v["pid.u_min"] is not None or v["pid.u_max"] is not None:
        clamp = (v["pid.u_min"] if v["pid.u_min"] is not None else -math.inf,
                 v["pid.u_max"] if v["pid.u_max"] is not None else math.inf)
    try:
        pid_cfg = PidConfig(v["pid.n_filter"], clamp)
    except ValueError as exc:
        fail(["pid.n_filter", "pid.u_min", "pid.u_max"], exc)

    geometry = FisGeometry(
        v["fuzzy.e.universe"], v["fuzzy.e.peaks"], v["fuzzy.e.scale"],
        v["fuzzy.de.universe"], v["fuzzy.de.peaks"], v["fuzzy.de.scale"],
        v["fuzzy.kp.peaks"], v["fuzzy.ki.peaks"], v["fuzzy.kd.peaks"],
        v["fuzzy.resolution"],
    )
    try:
        rules = load_rule_tables(v["fuzzy.rules"])
        fis = geometry.build(rules)
    except (OSError, ValueError) as exc:
        fail([k for k in CONFIG_KEYS if k.startswith("fuzzy.")], exc)

    kinds = (v["sim.controller"],) if "compare.controllers" not in lines else v["compare.controllers"]
    configs = []
    for kind in kinds:
        try:
            configs.append(simkit.SimConfig(
                controller=kind, setpoint=v["sim.setpoint"], dt=v["sim.dt"],
                duration=v["sim.duration"], plant=plant, gains=gains, pid=pid_cfg,
                fis=fis, start_at_rest=v["sim.start_at_rest"]))
        except ValueError as exc:
            fail(["sim.controller", "sim.dt", "sim.duration", "sim.setpoint"], exc)
    try:
        return RunManifest(tuple(configs), Path(v["out.dir"]), v["out.csv"], v["out.svg"],
                           v["out.report"], v["grid.n"], v["fuzzy.rules"])
    except ConfigError as exc:
        fail(["out.csv", "out.svg", "out.report"], exc)


def parse_config(path: str | Path | None) -> RunManifest:
    """Load a config file into a manifest; ``None`` gives all defaults."""
    if path is None:
        return manifest_from_values(parse_config_text(""))
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from None
    return manifest_from_values(parse_config_text(text, str(path)), str(path))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(x) for x in value)
    return str(value)


def write_config(manifest: RunManifest) -> str:
    """Serialise a manifest so that ``parse_config`` reproduces it."""
    cfg = manifest.configs[0]
    geo = FisGeometry.of(cfg.fis) if cfg.fis is not None else DEFAULT_GEOMETRY
    p, g, pc = cfg.plant, cfg.gains, cfg.pid
    items = {
        **{f"plant.{k}": val for k, val in asdict(p).items()},
        "pid.kp": g.kp, "pid.ki": g.ki, "pid.kd": g.kd,
        "pid.n_filter": pc.n_filter,
        "sim.controller": cfg.controller,
        "sim.setpoint": cfg.setpoint,
        "sim.dt": cfg.dt,
        "sim.start_at_rest": cfg.start_at_rest,
        "fuzzy.e.universe": (geo.e_universe[0], geo.e_universe[1]),
        "fuzzy.e.peaks": tuple(geo.e_peaks),
        "fuzzy.e.scale": geo.e_scale,
        "fuzzy.de.universe": (geo.de_universe[0], geo.de_universe[1]),
        "fuzzy.de.peaks": tuple(geo.de_peaks),
        "fuzzy.de.scale": geo.de_scale,
        "fuzzy.kp.peaks": tuple(geo.kp_peaks),
        "fuzzy.ki.peaks": tuple(geo.ki_peaks),
        "fuzzy.kd.peaks": tuple(geo.kd_peaks),
        "fuzzy.resolution": geo.resolution,
        "grid.n": manifest.grid_n,
        "out.dir": str(manifest.out_dir),
        "out.csv": manifest.emit_csv,
        "out.svg": manifest.emit_svg,
        "out.report": manifest.emit_report,
    }
    if pc.clamp is not None:
        for key, limit in zip(("pid.u_min", "pid.u_max"), pc.clamp):
            if math.isfinite(limit):
                items[key] = limit
    if cfg.duration is not None:
        items["sim.duration"] = cfg.duration
    if len(manifest.configs) > 1 or any(c.controller != cfg.controller for c in manifest.configs):
        items["compare.controllers"] = tuple(c.controller for c in manifest.configs)
    if manifest.rules_path is not None:
        items["fuzzy.rules"] = manifest.rules_path
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in items.items())


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="")
    return path


def _prepare_out(out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"{out_dir}: output directory is not writable")
    return out_dir


def _metrics_dict(m: simkit.StepMetrics) -> dict:
    return asdict(m)


def cmd_simulate(manifest: RunManifest) -> list[Path]:
    out = _prepare_out(manifest.out_dir)
    written = []
    for cfg in manifest.configs:
        trace = simkit.run(cfg)
        stem = cfg.controller
        if manifest.emit_csv:
            written.append(_write_text(out / f"{stem}.csv", simkit.trace_to_csv(trace)))
        if manifest.emit_report:
            m = simkit.metrics(trace)
            written.append(_write_text(out / f"{stem}.metrics.json",
                                       json.dumps(_metrics_dict(m), indent=2, sort_keys=True) + "\n"))
        if manifest.emit_svg:
            from .plotting import plot_step_response

            written.append(plot_step_response(trace, out / f"{stem}.svg", title=cfg.label))
    return written


def cmd_compare(manifest: RunManifest) -> list[Path]:
    out = _prepare_out(manifest.out_dir)
    comparison = simkit.compare(manifest.configs)
    written = []
    if manifest.emit_report:
        written.append(_write_text(out / "comparison.txt", comparison.to_text()))
    if manifest.emit_csv:
        written.append(_write_text(out / "comparison.csv", comparison.to_csv()))
    if manifest.emit_svg:
        from .plotting import plot_comparison

        written.append(plot_comparison(comparison, out / "comparison.svg"))
    failed = [c for c in comparison.columns if c.error]
    if failed:
        raise RuntimeError("; ".join(f"{c.title}: {c.error}" for c in failed))
    return written


def gains_surface(fis, n: int = 41) -> list[tuple[float, float, float, float, float]]:
    """Crisp gains on a uniform ``n x n`` grid over both input universes (after scaling)."""
    es = np.linspace(fis.e_var.lo, fis.e_var.hi, n) / fis.e_var.scale
    des = np.linspace(fis.de_var.lo, fis.de_var.hi, n) / fis.de_var.scale
    rows = []
    for e in es.tolist():
        for de in des.tolist():
            g = gains_from_error(fis, e, de)
            rows.append((e, de, g.kp, g.ki, g.kd))
    return rows


def cmd_gains_surface(manifest: RunManifest) -> list[Path]:
    out = _prepare_out(manifest.out_dir)
    fis = manifest.configs[0].fis
    lines = ["e,de,kp,ki,kd"]
    lines += [",".join(repr(x) for x in row) for row in gains_surface(fis, manifest.grid_n)]
    return [_write_text(out / "gains_surface.csv", "\n".join(lines) + "\n")]


def cmd_metrics(trace_path: str) -> simkit.StepMetrics:
    return simkit.metrics(simkit.read_trace(trace_path))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzypid", description="DC motor PID / fuzzy-PID step-response toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="output directory (overrides out.dir)")
        p.add_argument("--csv", action="store_true", default=None, help="write CSV output")
        p.add_argument("--svg", action="store_true", default=None, help="write SVG figure(s)")
        p.add_argument("--dt", type=float, help="integration/control step, s")
        p.add_argument("--setpoint", type=float, help="speed setpoint (open loop: applied voltage)")
        p.add_argument("--controller", help="open-loop | pid | fuzzy-pid (comma list for compare)")

    common(sub.add_parser("simulate", help="run one scenario and write its trace"))
    common(sub.add_parser("compare", help="tabulate step-response metrics side by side"))
    common(sub.add_parser("gains-surface", help="tabulate scheduled gains over the (e, de) grid"))
    m = sub.add_parser("metrics", help="compute step-response metrics of a trace CSV")
    m.add_argument("trace")
    return parser


def _manifest_for(args) -> RunManifest:
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8") if Path(args.config).is_file() else None
        if text is None:
            raise ConfigError(f"{args.config}: config file not found")
        values = parse_config_text(text, args.config)
        source = args.config
    else:
        values = parse_config_text("")
        source = "<defaults>"
    lines = dict(values["_lines"])
    if args.dt is not None:
        values["sim.dt"] = args.dt
    if args.setpoint is not None:
        values["sim.setpoint"] = args.setpoint
    if args.controller is not None:
        kinds = _controllers(args.controller)
        if args.command == "compare":
            values["compare.controllers"] = kinds
            lines["compare.controllers"] = 0
        else:
            values["sim.controller"] = kinds[0]
    if args.out is not None:
        values["out.dir"] = args.out
    if args.command == "compare" and "compare.controllers" not in lines:
        lines["compare.controllers"] = 0
    values["_lines"] = lines
    manifest = manifest_from_values(values, source)
    flags = {}
    if args.csv or args.svg:
        # explicit output flags select exactly what is written
        flags = dict(emit_csv=bool(args.csv), emit_svg=bool(args.svg),
                     emit_report=manifest.emit_report)
    return replace(manifest, **flags) if flags else manifest


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "metrics":
            m = cmd_metrics(args.trace)
            print(json.dumps(_metrics_dict(m), indent=2, sort_keys=True))
            return 0
        manifest = _manifest_for(args)
        if args.command == "simulate":
            written = cmd_simulate(manifest)
        elif args.command == "compare":
            written = cmd_compare(manifest)
            if manifest.emit_report:
                sys.stdout.write((manifest.out_dir / "comparison.txt").read_text(encoding="utf-8"))
        else:
            written = cmd_gains_surface(manifest)
        for path in written:
            log.info("wrote %s", path)
        return 0
    except (ConfigError, ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"fuzzypid: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
