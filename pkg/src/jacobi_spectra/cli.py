"""``spectra`` command-line front end.

    spectra <check|density|cdf|oracle|compare> --config run.json [--out DIR]

Without ``--out`` the artifacts are written to standard output.  Exit status
is 0 on success, 2 when a requested check fails or a certification gate
refuses to run, and 1 on numeric failures and invalid configurations; every
error is also reported as one line of JSON on standard error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conditions import ALL_CHECKS, FAIL, certify
from .density import DEFAULT_SCHEDULE, cdf_from_density, limit_density
from .errors import CertificationError, ConfigError, ModelError, NumericFailure, SpectraError
from .oracle import DEFAULT_EPS_SCHEDULE, compare_cdfs, empirical_cdf, stieltjes_density, truncate_quadrature
from .recurrence import CoefficientModel

__all__ = ["RunConfig", "parse_config", "model_from_dict", "run", "main", "format_number"]

SUBCOMMANDS = ("check", "density", "cdf", "oracle", "compare")
DEFAULT_CHECKS = ("carleman", "monotone_dominance", "centered", "q_domination", "envelope")

_TOP_KEYS = {
    "model",
    "interval",
    "grid_step",
    "n_schedule",
    "tol",
    "depth_tol",
    "eps_schedule",
    "p",
    "quadrature_N",
    "oracle_points",
    "checks",
    "theorem24_N",
    "carleman_N",
}
_MODEL_KEYS = {
    "constant": {"a", "b"},
    "affine": {"a0", "a1", "b0", "b1"},
    "power": {"c", "alpha", "d", "beta"},
    "table": {"table", "path", "tail"},
}
_MODEL_DEFAULTS = {"power": {"d": 0.0, "beta": 0.0}}


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def format_number(v):
    """Shortest round-trip decimal for a double (``repr``); ``inf``/``nan`` spelled out."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else format_number(v)
    return obj


def _dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def _csv_text(header, rows, config_hash):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    buf.write(f"# config_sha256={config_hash}\n")
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    model: CoefficientModel
    model_spec: dict
    interval: tuple
    grid_step: float
    n_schedule: tuple
    tol: float
    depth_tol: float
    eps_schedule: tuple
    p: float
    quadrature_N: int
    oracle_points: int
    checks: tuple
    theorem24_N: int
    carleman_N: int

    def to_dict(self):
        return {
            "model": self.model_spec,
            "interval": list(self.interval),
            "grid_step": self.grid_step,
            "n_schedule": list(self.n_schedule),
            "tol": self.tol,
            "depth_tol": self.depth_tol,
            "eps_schedule": list(self.eps_schedule),
            "p": self.p,
            "quadrature_N": self.quadrature_N,
            "oracle_points": self.oracle_points,
            "checks": list(self.checks),
            "theorem24_N": self.theorem24_N,
            "carleman_N": self.carleman_N,
        }

    @property
    def sha256(self):
        return hashlib.sha256(_dumps(self.to_dict()).encode("utf-8")).hexdigest()

    def grid(self):
        left, right = self.interval
        n = int(math.floor((right - left) / self.grid_step + 1e-9))
        g = left + self.grid_step * np.arange(n + 1)
        return g[g <= right]

    def oracle_grid(self):
        left, right = self.interval
        m = self.oracle_points
        h = (right - left) / (m + 1)
        return left + h * np.arange(1, m + 1)


def _number(value, name, *, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number", field=name)
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name} must be an integer", field=name)
        value = int(value)
    else:
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{name} must be finite", field=name)
    if positive and not value > 0:
        raise ConfigError(f"{name} must be positive", field=name)
    return value


def _read_table_csv(path, name):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read table file {str(path)!r}: {exc.strerror}", field=name) from None
    reader = csv.reader(line for line in text.splitlines() if line.strip() and not line.startswith("#"))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != ["a", "b"]:
        raise ConfigError("table file must start with the header 'a,b'", field=name)
    out = []
    for k, row in enumerate(rows[1:]):
        try:
            a, b = (float(c) for c in row)
        except ValueError:
            raise ConfigError(f"malformed table row {k}", field=f"{name}[{k}]") from None
        out.append([a, b])
    return out


def model_from_dict(spec, base_dir=None, prefix="model"):
    """Build a :class:`CoefficientModel` from its JSON description."""
    if not isinstance(spec, dict):
        raise ConfigError(f"{prefix} must be an object", field=prefix)
    kind = spec.get("kind")
    if kind not in _MODEL_KEYS:
        raise ConfigError(f"{prefix}.kind must be one of {sorted(_MODEL_KEYS)}", field=f"{prefix}.kind")
    allowed = _MODEL_KEYS[kind] | {"kind"}
    for key in spec:
        if key not in allowed:
            raise ConfigError(f"unknown key {prefix}.{key}", field=f"{prefix}.{key}")
    if kind != "table":
        params = dict(_MODEL_DEFAULTS.get(kind, {}))
        for key in sorted(_MODEL_KEYS[kind]):
            if key in spec:
                params[key] = _number(spec[key], f"{prefix}.{key}")
            elif key not in params:
                raise ConfigError(f"missing {prefix}.{key}", field=f"{prefix}.{key}")
        for key in ("b", "b0", "c"):
            if key in params and not params[key] > 0:
                raise ConfigError(f"{key} must be positive", field=f"{prefix}.{key}")
        try:
            model = getattr(CoefficientModel, kind)(**params)
        except ModelError as exc:
            raise ConfigError(str(exc), field=prefix) from None
        return model, {"kind": kind, **params}

    if ("table" in spec) == ("path" in spec):
        raise ConfigError(f"{prefix} needs exactly one of 'table' or 'path'", field=f"{prefix}.table")
    if "path" in spec:
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        rows = _read_table_csv(path, f"{prefix}.path")
    else:
        rows = spec["table"]
        if not isinstance(rows, list) or not rows:
            raise ConfigError(f"{prefix}.table must be a non-empty list of [a, b] rows", field=f"{prefix}.table")
    clean = []
    for k, row in enumerate(rows):
        name = f"{prefix}.table[{k}]"
        if not isinstance(row, (list, tuple)) or len(row) != 2:
            raise ConfigError(f"{name} must be a pair [a, b]", field=name)
        a = _number(row[0], name)
        b = _number(row[1], name)
        if not b > 0:
            raise ConfigError(f"b must be positive ({name})", field=name)
        clean.append([a, b])
    if "tail" not in spec:
        raise ConfigError(f"{prefix}.tail must be given explicitly ('repeat-last', a model, or null)", field=f"{prefix}.tail")
    tail_spec = spec["tail"]
    if tail_spec is None or tail_spec == "repeat-last":
        tail, tail_echo = tail_spec, tail_spec
    elif isinstance(tail_spec, dict):
        tail, tail_echo = model_from_dict(tail_spec, base_dir, f"{prefix}.tail")
    else:
        raise ConfigError(f"{prefix}.tail must be 'repeat-last', a model or null", field=f"{prefix}.tail")
    try:
        model = CoefficientModel.from_table(clean, tail)
    except ModelError as exc:
        raise ConfigError(str(exc), field=f"{prefix}.table") from None
    return model, {"kind": "table", "table": clean, "tail": tail_echo}


def _increasing(values, name, *, integer=False, positive=True):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name} must be a non-empty list", field=name)
    out = [_number(v, f"{name}[{k}]", integer=integer, positive=positive) for k, v in enumerate(values)]
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"{name} must be strictly increasing", field=name)
    return tuple(out)


def parse_config(text, base_dir=None):
    """Validate a JSON run configuration and materialise every default."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} at line {exc.lineno}", field="<document>") from None
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object", field="<document>")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key}", field=key)
    if "model" not in doc:
        raise ConfigError("missing model", field="model")
    model, model_spec = model_from_dict(doc["model"], base_dir)

    schedule = _increasing(doc.get("n_schedule", list(DEFAULT_SCHEDULE)), "n_schedule", integer=True)
    if schedule[0] < 1:
        raise ConfigError("n_schedule entries must be at least 1", field="n_schedule")

    if "interval" in doc:
        iv = doc["interval"]
        if not isinstance(iv, list) or len(iv) != 2:
            raise ConfigError("interval must be [a, b]", field="interval")
        left = _number(iv[0], "interval[0]")
        right = _number(iv[1], "interval[1]")
    else:
        try:
            a0, b0 = model.at(schedule[0])
        except ModelError as exc:
            raise ConfigError(str(exc), field="model") from None
        left, right = a0 - b0, a0 + b0
    if not left < right:
        raise ConfigError("interval must satisfy a < b", field="interval")

    grid_step = _number(doc.get("grid_step", 1e-2), "grid_step", positive=True)
    tol = _number(doc.get("tol", 1e-6), "tol", positive=True)
    depth_tol = _number(doc.get("depth_tol", 1e-5), "depth_tol", positive=True)
    eps = doc.get("eps_schedule", list(DEFAULT_EPS_SCHEDULE))
    if not isinstance(eps, list) or not eps:
        raise ConfigError("eps_schedule must be a non-empty list", field="eps_schedule")
    eps = tuple(_number(e, f"eps_schedule[{k}]", positive=True) for k, e in enumerate(eps))
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_schedule must be strictly decreasing", field="eps_schedule")

    p = doc.get("p", "inf")
    if p in ("inf", "Infinity"):
        p = math.inf
    else:
        p = _number(p, "p")
    if not p >= 1:
        raise ConfigError("p must be at least 1", field="p")

    quadrature_N = _number(doc.get("quadrature_N", 500), "quadrature_N", positive=True, integer=True)
    oracle_points = _number(doc.get("oracle_points", 21), "oracle_points", positive=True, integer=True)
    theorem24_N = _number(doc.get("theorem24_N", 100_000), "theorem24_N", integer=True)
    if theorem24_N < 100:
        raise ConfigError("theorem24_N must be at least 100", field="theorem24_N")
    carleman_N = _number(doc.get("carleman_N", 10_000), "carleman_N", positive=True, integer=True)

    checks = doc.get("checks", list(DEFAULT_CHECKS))
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks must be a non-empty list", field="checks")
    for k, c in enumerate(checks):
        if c not in ALL_CHECKS:
            raise ConfigError(f"unknown check {c!r}", field=f"checks[{k}]")
    checks = tuple(c for c in ALL_CHECKS if c in checks)

    return RunConfig(
        model=model,
        model_spec=model_spec,
        interval=(left, right),
        grid_step=grid_step,
        n_schedule=schedule,
        tol=tol,
        depth_tol=depth_tol,
        eps_schedule=eps,
        p=p,
        quadrature_N=quadrature_N,
        oracle_points=oracle_points,
        checks=checks,
        theorem24_N=theorem24_N,
        carleman_N=carleman_N,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _density(cfg):
    return limit_density(cfg.model, cfg.grid(), cfg.n_schedule, cfg.tol, interval=cfg.interval)


def _run_check(cfg):
    report = certify(
        cfg.model,
        cfg.interval,
        n0=cfg.n_schedule[0],
        n_max=cfg.n_schedule[-1],
        grid=cfg.grid(),
        p=cfg.p,
        checks=cfg.checks,
        carleman_N=cfg.carleman_N,
        theorem24_N=cfg.theorem24_N,
        tol=cfg.tol,
    )
    doc = {"config": cfg.to_dict(), "config_sha256": cfg.sha256, "report": report.to_dict()}
    status = 2 if report.failed() else 0
    return status, {"check.json": _dumps(doc) + "\n"}


def _run_density(cfg):
    d = _density(cfg)
    header = ["x"] + [f"f_{n}" for n in d.n_schedule] + ["f_final"]
    rows = np.column_stack([d.grid, d.f.T, d.f_final])
    return 0, {"density.csv": _csv_text(header, rows, cfg.sha256)}


def _run_cdf(cfg):
    d = _density(cfg)
    sigma = cdf_from_density(d.grid, d.f_final, d.grid)
    rows = np.column_stack([d.grid, sigma])
    return 0, {"cdf.csv": _csv_text(["lambda", "sigma"], rows, cfg.sha256)}


def _run_oracle(cfg):
    q = truncate_quadrature(cfg.model, cfg.quadrature_N)
    xs = cfg.oracle_grid()
    f = stieltjes_density(cfg.model, xs, cfg.eps_schedule, cfg.depth_tol)
    return 0, {
        "quadrature.csv": _csv_text(["node", "weight"], np.column_stack([q.nodes, q.weights]), cfg.sha256),
        "stieltjes.csv": _csv_text(["x", "f"], np.column_stack([xs, np.atleast_1d(f)]), cfg.sha256),
    }


def _run_compare(cfg):
    xs = cfg.oracle_grid()
    f_st = np.atleast_1d(stieltjes_density(cfg.model, xs, cfg.eps_schedule, cfg.depth_tol))
    f_cf = limit_density(cfg.model, xs, cfg.n_schedule, cfg.tol, interval=cfg.interval).f_final
    d = _density(cfg)
    sigma = cdf_from_density(d.grid, d.f_final, d.grid)
    q = truncate_quadrature(cfg.model, cfg.quadrature_N)
    step = empirical_cdf(q, d.grid) - empirical_cdf(q, d.grid[0])
    doc = {
        "config": cfg.to_dict(),
        "config_sha256": cfg.sha256,
        "density_vs_stieltjes": compare_cdfs(f_cf, f_st, xs),
        "cdf_vs_quadrature": compare_cdfs(sigma, step, d.grid),
        "oracle_x": xs,
        "quadrature_N": cfg.quadrature_N,
        "n_final": d.n_schedule[-1],
    }
    return 0, {"compare.json": _dumps(doc) + "\n"}


_RUNNERS = {
    "check": _run_check,
    "density": _run_density,
    "cdf": _run_cdf,
    "oracle": _run_oracle,
    "compare": _run_compare,
}


def run(subcommand, config):
    """Execute ``subcommand``; returns ``(exit_status, {file_name: text})``."""
    if subcommand not in _RUNNERS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    return _RUNNERS[subcommand](config)


def _error_line(exc):
    doc = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("field", "index"):
        if getattr(exc, attr, None) is not None:
            doc[attr] = getattr(exc, attr)
    check = getattr(exc, "check", None)
    if check is not None:
        doc["check"] = check.to_dict()
    return _dumps(doc)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="spectra", description="Spectral densities of Jacobi operators.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="directory for output files (default: standard output)")
    args = parser.parse_args(argv)
    try:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", field="--config") from None
        cfg = parse_config(text, base_dir=path.parent)
        status, artifacts = run(args.subcommand, cfg)
    except CertificationError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    except (ConfigError, NumericFailure, SpectraError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in artifacts.items():
            with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    else:
        sys.stdout.write("\n".join(artifacts.values()))
    if status == 2:
        doc = json.loads(artifacts["check.json"])["report"]["checks"]
        failed = {k: v["witness"] for k, v in doc.items() if v["status"] == FAIL}
        print(_dumps({"error": "CheckFailed", "message": "requested checks failed", "failed": failed}), file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
