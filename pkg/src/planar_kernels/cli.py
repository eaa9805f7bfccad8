"""Command-line front end: ``kernels``, ``verify`` and ``sweep``.

Exit codes: 0 pass, 2 configuration error, 3 solver failure, 4 inconclusive
check, 5 failed check.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .extremal import ConditioningError
from .geometry import (ANNULUS, CIRCULAR, DISC, DomainError, DomainSpec, annulus, boundary_distance,
                       circular_domain, contains, format_complex, parse_complex, parse_holes, unit_disc)
from .green import GreenError, GreenEvaluator
from .verify import ALL_CHECKS, DEFAULT_R_GRID, KernelEngine, Settings, run_checks

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INCONCLUSIVE, EXIT_FAILED = 0, 2, 3, 4, 5
MIN_DISTANCE = 0.01
WARN_DISTANCE = 0.05


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    points: tuple[complex, ...]
    basis_degree: int = 40
    boundary_nodes: int = 512
    area_resolution: int = 256
    r_grid: tuple[float, ...] = field(default_factory=lambda: tuple(float(x) for x in DEFAULT_R_GRID))
    checks: tuple[str, ...] = ALL_CHECKS
    output_path: str | None = None
    output_format: str = "json"

    def __post_init__(self):
        if self.basis_degree < 5:
            raise ConfigError("basis_degree must be >= 5")
        if self.boundary_nodes < 64:
            raise ConfigError("boundary_nodes must be >= 64")
        if self.area_resolution < 64:
            raise ConfigError("area_resolution must be >= 64")
        if self.output_format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks: {', '.join(sorted(unknown))}")
        for w in self.points:
            if not contains(self.domain, w):
                raise ConfigError(f"point {format_complex(w)} is not interior to the domain")
            d = boundary_distance(self.domain, w)
            if d < MIN_DISTANCE:
                raise ConfigError(f"point {format_complex(w)} is within {MIN_DISTANCE} of the boundary")
            if d < WARN_DISTANCE:
                warnings.warn(f"point {format_complex(w)} is within {WARN_DISTANCE} of the boundary; "
                              "conditioning degrades", stacklevel=2)

    @property
    def settings(self) -> Settings:
        return Settings(self.basis_degree, self.area_resolution, self.boundary_nodes)

    def to_dict(self) -> dict:
        return {"domain": self.domain.to_dict(), "points": [format_complex(w) for w in self.points],
                "basis_degree": self.basis_degree, "boundary_nodes": self.boundary_nodes,
                "area_resolution": self.area_resolution, "r_grid": list(self.r_grid),
                "checks": list(self.checks), "format": self.output_format}


# ------------------------------------------------------------------ parsing

def _split_list(text: str) -> list[str]:
    text = text.strip().strip("[]")
    return [t.strip() for t in text.split(",") if t.strip()]


def read_config_file(path: str) -> dict[str, str]:
    """Plain key=value lines; '#' starts a comment; repeated ``point`` keys accumulate."""
    out: dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from err
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in ("point", "points"):
            out["points"] = ",".join(filter(None, [out.get("points", ""), val]))
        else:
            out[key] = val
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    merged = read_config_file(args.config) if args.config else {}
    for key in ("domain", "q", "holes", "basis_degree", "boundary_nodes", "area_resolution",
                "r_grid", "checks", "out", "format"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = str(val)
    if args.point:
        merged["points"] = ",".join(args.point)
    kind = merged.get("domain", DISC)
    try:
        if kind == DISC:
            domain = unit_disc()
        elif kind == ANNULUS:
            if "q" not in merged:
                raise ConfigError("annulus needs --q")
            domain = annulus(float(merged["q"]))
        elif kind == CIRCULAR:
            if "holes" not in merged:
                raise ConfigError("circular domain needs --holes")
            domain = circular_domain(parse_holes(merged["holes"]))
        else:
            raise ConfigError(f"unknown domain {kind!r}")
        points = tuple(parse_complex(p) for p in _split_list(merged.get("points", "0")))
        checks = merged.get("checks", "all")
        checks = ALL_CHECKS if checks.strip() == "all" else tuple(_split_list(checks))
        r_grid = (tuple(float(x) for x in _split_list(merged["r_grid"])) if "r_grid" in merged
                  else tuple(float(x) for x in DEFAULT_R_GRID))
        return RunConfig(domain, points,
                         int(merged.get("basis_degree", 40)), int(merged.get("boundary_nodes", 512)),
                         int(merged.get("area_resolution", 256)), r_grid, checks,
                         merged.get("out"), merged.get("format", "json"))
    except (DomainError, ConfigError):
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err


# ------------------------------------------------------------------ output

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write(config: RunConfig, payload: dict, rows: list[dict], stream=sys.stdout) -> None:
    if config.output_path is None:
        return
    if config.output_format == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if rows:
            keys = list(rows[0])
            writer.writerow(keys)
            for row in rows:
                writer.writerow([_fmt(v) if isinstance(v, float) else v for v in (row[k] for k in keys)])
        text = buf.getvalue()
    with open(config.output_path, "w") as fh:
        fh.write(text)


def _table(rows: list[dict], keys: list[str], stream=sys.stdout) -> None:
    width = {k: max(len(k), *(len(_cell(r[k])) for r in rows)) for k in keys}
    print("  ".join(k.rjust(width[k]) for k in keys), file=stream)
    for r in rows:
        print("  ".join(_cell(r[k]).rjust(width[k]) for k in keys), file=stream)


def _cell(v) -> str:
    return f"{v:.10g}" if isinstance(v, float) else str(v)


# ------------------------------------------------------------------ commands

def kernel_row(eng: KernelEngine, w: complex) -> dict:
    b = eng.bergman(w)
    h = eng.hardy(w)
    c = eng.c_beta(w)
    delta = eng.doubling_delta(w)
    return {"point": format_complex(w), "w_real": w.real, "w_imag": w.imag,
            "bergman": b.value, "bergman_error": b.error,
            "hardy": h.value, "hardy_error": h.error,
            "pi_bergman": np.pi * b.value,
            "gap": h.value - np.pi * b.value, "gap_error": h.error + np.pi * b.error,
            "c_beta_sq": c.value ** 2, "c_beta_sq_error": 2 * c.value * c.error,
            "g0": 1.0 / b.value, "g0_error": b.error / b.value ** 2,
            "bergman_doubling_delta": delta["bergman"], "hardy_doubling_delta": delta["hardy"]}


def _per_point(config: RunConfig, fn) -> list:
    # one evaluator per point, so threads share no caches; map keeps input order
    def run(w):
        return fn(KernelEngine(GreenEvaluator(config.domain), config.settings), w)
    workers = min(len(config.points), os.cpu_count() or 1)
    if workers <= 1:
        return [run(w) for w in config.points]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(run, config.points))


def cmd_kernels(config: RunConfig) -> int:
    rows = _per_point(config, kernel_row)
    _table(rows, ["point", "bergman", "hardy", "pi_bergman", "gap", "c_beta_sq", "g0",
                  "bergman_doubling_delta", "hardy_doubling_delta"])
    _write(config, {"config": config.to_dict(), "kernels": rows}, rows)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    reports = _per_point(config, lambda eng, w: run_checks(eng.ev, w, config.checks, config.settings,
                                                           config.r_grid, engine=eng))
    checks, rows = [], []
    for w, report in zip(config.points, reports):
        for c in report.checks:
            d = c.to_dict()
            d["point"] = format_complex(w)
            checks.append(d)
            rows.append({"point": d["point"], "name": c.name, "status": c.status,
                         "residual": c.residual, "tolerance": c.tolerance})
    _table(rows, ["point", "name", "status", "residual", "tolerance"])
    csv_rows = [{"point": d["point"], "name": d["name"], "status": d["status"], "label": k, "value": v,
                 "residual": d["residual"], "tolerance": d["tolerance"]}
                for d in checks for k, v in d["measured"].items()]
    _write(config, {"config": config.to_dict(), "checks": checks}, csv_rows)
    if any(d["status"] == "inconclusive" for d in checks):
        return EXIT_INCONCLUSIVE
    return EXIT_OK if all(d["passed"] for d in checks) else EXIT_FAILED


def cmd_sweep(config: RunConfig, over: str) -> int:
    ev = GreenEvaluator(config.domain)
    eng = KernelEngine(ev, config.settings)
    if over == "r":
        if not config.r_grid:
            raise ConfigError("empty r grid")
        w = config.points[0]
        rows = []
        for r in config.r_grid:
            if not 0.0 < r <= 1.0:
                raise ConfigError("r grid values must lie in (0, 1]")
            g = eng.g(w, r)
            rows.append({"r": float(r), "g": g.value, "g_error": g.error})
        _table(rows, ["r", "g", "g_error"])
    else:
        rows = [{key: k[key] for key in ("w_real", "w_imag", "bergman", "hardy", "gap")}
                for k in _per_point(config, kernel_row)]
        _table(rows, ["w_real", "w_imag", "bergman", "hardy", "gap"])
    _write(config, {"config": config.to_dict(), "sweep": rows}, rows)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--domain", choices=(DISC, ANNULUS, CIRCULAR))
    common.add_argument("--q", type=float)
    common.add_argument("--holes", help="e.g. [(0.3+0i,0.1),(-0.4+0.2i,0.15)]")
    common.add_argument("--point", action="append", help="complex a+bi; repeatable")
    common.add_argument("--basis-degree", dest="basis_degree", type=int)
    common.add_argument("--boundary-nodes", dest="boundary_nodes", type=int)
    common.add_argument("--area-resolution", dest="area_resolution", type=int)
    common.add_argument("--r-grid", dest="r_grid", help="comma-separated r values")
    common.add_argument("--checks", help="comma-separated names or 'all'")
    common.add_argument("--out", help="output file")
    common.add_argument("--format", choices=("json", "csv"))
    parser = argparse.ArgumentParser(prog="planar-kernels", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("kernels", parents=[common], help="B, hR, c_beta and g_w(0) at each point")
    sub.add_parser("verify", parents=[common], help="run inequality and limit checks")
    sw = sub.add_parser("sweep", parents=[common], help="plot data over r or over points")
    sw.add_argument("--over", choices=("r", "points"), default="r")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        config = build_config(args)
        if args.command == "kernels":
            return cmd_kernels(config)
        if args.command == "verify":
            return cmd_verify(config)
        return cmd_sweep(config, args.over)
    except (ConfigError, DomainError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConditioningError, GreenError, np.linalg.LinAlgError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
