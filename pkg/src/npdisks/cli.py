"""Command-line driver: ``npdisks spectrum|resonance|validate|field``.

Configuration is a flat ``key = value`` file (``#`` starts a comment) plus
flag overrides; flags win.  Unknown keys are rejected.  Every output file
starts with the resolved configuration, numbers are written with 17
significant digits, and identical configurations give byte-identical files.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
Errors are reported on stderr as a one-line JSON record.

Field maps skip points closer than ``guard`` to the boundary.  Points on the
open segment (-alpha, alpha) of the x1-axis lie inside the domain on the
branch cut of the bipolar map; the field is evaluated there with the
principal branch theta = pi, on which the interior solution is continuous.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .bem_oracle import DEFAULT_THETA0_FLOOR, assemble, build_mesh, oracle_spectrum
from .checks import run_all
from .field_solver import field_map
from .geometry import Geometry, boundary_distance
from .multipliers import bound, eta
from .resonance import (
    DipoleSource,
    ResonanceQuery,
    dipole_at_depth,
    interior_limit,
    never_order_check,
    rate_fit,
)
from .spectral_core import XiGrid

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    items = [t for t in str(text).replace(";", ",").split(",") if t.strip()]
    return [float(t) for t in items]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _opt_complex(text: str):
    t = str(text).strip()
    return None if t.lower() in ("", "none") else complex(t.replace(" ", ""))


_COMMON: dict[str, tuple[Callable, Any]] = {
    "radius": (float, 1.0),
    "theta0": (float, math.pi / 4),
    "theta0_floor": (float, DEFAULT_THETA0_FLOOR),
    "L": (float, 30.0),
    "N": (int, 4096),
    "M": (int, 256),
    "beta": (float, 3.0),
    "out": (str, "npdisks_out"),
    "format": (str, "csv"),
    "threads": (int, 0),
}

_SOURCE: dict[str, tuple[Callable, Any]] = {
    "kappa": (float, 0.5),
    "source_xi": (float, 0.3),
    "source_x1": (str, "none"),
    "source_x2": (str, "none"),
    "pol_angle": (float, math.pi / 4),
    "lambda0": (str, "b/2"),
}

_COMMANDS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "spectrum": {
        "mesh_sizes": (_int_list, "64,128,256"),
        "eta_s_max": (float, 10.0),
        "eta_points": (int, 201),
    },
    "resonance": {
        **_SOURCE,
        "deltas": (str, "none"),
        "delta_max": (float, 1e-2),
        "delta_min": (float, 1e-6),
        "delta_count": (int, 12),
        "slope_tol": (float, 0.05),
        "limit_tol": (float, 0.02),
        "decay_ratio": (float, 0.1),
    },
    "validate": {
        "calderon_tol": (float, 1e-6),
    },
    "field": {
        **_SOURCE,
        "eps_c": (_opt_complex, "none"),
        "delta": (float, 1e-2),
        "x1_min": (float, -2.0),
        "x1_max": (float, 2.0),
        "x1_count": (int, 41),
        "x2_min": (float, -2.0),
        "x2_max": (float, 2.0),
        "x2_count": (int, 41),
        "guard": (float, 0.02),
    },
}


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file into raw strings."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{n}: empty key")
        out[key] = value
    return out


def resolve_config(command: str, raw: dict[str, Any]) -> dict[str, Any]:
    """Apply defaults and types; reject unknown keys and invalid values."""
    schema = {**_COMMON, **_COMMANDS[command]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    cfg: dict[str, Any] = {}
    for key, (conv, default) in schema.items():
        value = raw.get(key, default)
        try:
            cfg[key] = conv(value) if isinstance(value, str) or conv in (float, int) else value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key}: {value!r}") from exc
    _validate(command, cfg)
    return cfg


def _validate(command: str, cfg: dict[str, Any]) -> None:
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    if not (cfg["radius"] > 0 and math.isfinite(cfg["radius"])):
        raise ConfigError("radius must be positive")
    if not 0 < cfg["theta0"] < math.pi / 2:
        raise ConfigError(f"theta0 must lie in (0, pi/2), got {cfg['theta0']}")
    if cfg["theta0"] < cfg["theta0_floor"]:
        raise ConfigError(
            f"theta0 = {cfg['theta0']} is below the floor {cfg['theta0_floor']}: "
            "as theta0 -> 0 the disks become touching, the spectral bound b tends "
            "to 1/2 and the NP operator loses its uniform bounds, so results are "
            "not reliable"
        )
    if cfg["N"] < 8 or cfg["N"] % 2:
        raise ConfigError(f"N must be an even integer >= 8, got {cfg['N']}")
    if not cfg["L"] > 0:
        raise ConfigError("L must be positive")
    if cfg["M"] < 16 or cfg["M"] % 2:
        raise ConfigError(f"M must be an even integer >= 16, got {cfg['M']}")
    if cfg["beta"] < 1:
        raise ConfigError("beta must be >= 1")
    if cfg["threads"] < 0:
        raise ConfigError("threads must be >= 0")
    if command == "spectrum":
        if not cfg["mesh_sizes"] or any(m < 16 or m % 2 for m in cfg["mesh_sizes"]):
            raise ConfigError("mesh_sizes must be even integers >= 16")
        if cfg["eta_points"] < 2 or not cfg["eta_s_max"] > 0:
            raise ConfigError("eta tabulation needs eta_points >= 2 and eta_s_max > 0")
    if command in ("resonance", "field"):
        cfg["lambda0_value"] = parse_lambda0(cfg["lambda0"], bound(cfg["theta0"]))
    if command == "field":
        for ax in ("x1", "x2"):
            if cfg[f"{ax}_count"] < 0:
                raise ConfigError(f"{ax}_count must be >= 0")
        if not cfg["delta"] >= 0:
            raise ConfigError("delta must be >= 0")
        if not cfg["guard"] >= 0:
            raise ConfigError("guard must be >= 0")


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_lambda0(text: str, b: float) -> float:
    """Number or arithmetic in the spectral bound ``b``, e.g. ``b/2`` or ``-0.3*b``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "b":
            return b
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ConfigError(f"cannot parse lambda0 = {text!r}")

    try:
        return float(ev(ast.parse(str(text).strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse lambda0 = {text!r}") from exc


def _deltas(cfg) -> np.ndarray:
    if str(cfg["deltas"]).strip().lower() != "none":
        try:
            d = np.array(_float_list(cfg["deltas"]))
        except ValueError as exc:
            raise ConfigError(f"invalid deltas list {cfg['deltas']!r}") from exc
        return np.sort(d)[::-1]
    return np.geomspace(cfg["delta_max"], cfg["delta_min"], cfg["delta_count"])


def _source(g: Geometry, cfg) -> DipoleSource:
    a = (math.cos(cfg["pol_angle"]), math.sin(cfg["pol_angle"]))
    x1, x2 = str(cfg["source_x1"]).lower(), str(cfg["source_x2"]).lower()
    if x1 != "none" or x2 != "none":
        try:
            src = DipoleSource(complex(float(x1), float(x2)), a)
        except ValueError as exc:
            raise ConfigError("source_x1 and source_x2 must both be numbers") from exc
    else:
        src = dipole_at_depth(g, cfg["kappa"], cfg["source_xi"], a)
    src.validate(g)
    return src


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def fmt(x) -> str:
    """A number with 17 significant digits (``nan``/``inf`` spelled out)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-digit floats; non-finite floats become null."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, complex):
        return to_json({"re": obj.real, "im": obj.imag}, indent)
    return json.dumps(str(obj))


def _echo(cfg) -> dict[str, Any]:
    """Resolved configuration in a stable, serializable form."""
    out = {}
    for k in sorted(cfg):
        v = cfg[k]
        if isinstance(v, complex):
            v = f"{fmt(v.real)}{'+' if v.imag >= 0 else '-'}{fmt(abs(v.imag))}j"
        elif isinstance(v, list):
            v = ",".join(fmt(t) for t in v)
        elif isinstance(v, float):
            v = fmt(v)
        elif v is None:
            v = "none"
        out[k] = str(v)
    return out


def write_csv(path: Path, header: list[str], rows, cfg, extra: dict | None = None) -> None:
    lines = [f"# {k}={v}" for k, v in _echo(cfg).items()]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}={fmt(v) if not isinstance(v, str) else v}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, payload: dict, cfg) -> None:
    path.write_text(to_json({"config": _echo(cfg), **payload}) + "\n", encoding="utf-8")


@dataclass
class Outcome:
    code: int
    files: list[str]
    summary: dict


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _geometry(cfg) -> Geometry:
    return Geometry(cfg["radius"], cfg["theta0"])


def cmd_spectrum(cfg) -> Outcome:
    """eta tabulation, the bound b, and oracle eigenvalues at each mesh size."""
    g = _geometry(cfg)
    b = bound(g.theta0)
    out = Path(cfg["out"])
    s = np.linspace(0.0, cfg["eta_s_max"], cfg["eta_points"])
    e = eta(s, g.theta0)
    per_mesh = []
    eig_rows = []
    for M in cfg["mesh_sizes"]:
        mesh = build_mesh(g, M, cfg["beta"], theta0_floor=cfg["theta0_floor"])
        ev = oracle_spectrum(assemble(g, mesh))
        per_mesh.append(
            {
                "M": M,
                "count": int(ev.size),
                "min": float(ev[0]),
                "max": float(ev[-1]),
                "min_over_b": float(ev[0] / b),
                "max_over_b": float(ev[-1] / b),
            }
        )
        eig_rows.extend((M, k, v) for k, v in enumerate(ev))
    summary = {"b": b, "theta0": g.theta0, "meshes": per_mesh}
    files = []
    if cfg["format"] == "json":
        eigs = {str(M): [float(v) for (m, _, v) in eig_rows if m == M] for M in cfg["mesh_sizes"]}
        payload = {**summary, "eta": {"s": s, "eta": e}, "eigenvalues": eigs}
        files.append(out / "spectrum.json")
        write_json(files[-1], payload, cfg)
    else:
        files.append(out / "spectrum_eta.csv")
        write_csv(files[-1], ["s", "eta"], zip(s, e), cfg, {"b": b})
        files.append(out / "spectrum_eigenvalues.csv")
        write_csv(files[-1], ["M", "index", "eigenvalue"], eig_rows, cfg, {"b": b})
        files.append(out / "spectrum_summary.json")
        write_json(files[-1], summary, cfg)
    return Outcome(EXIT_OK, [str(f) for f in files], summary)


def _expected_slope(g: Geometry, src: DipoleSource, lambda0: float):
    """Expected exponent of ||phi_delta||^2 in delta and which slope carries it."""
    b = bound(g.theta0)
    if lambda0 == 0:
        return -(1 + src.depth(g)), "log_corrected_slope"
    if abs(abs(lambda0) - b) < 1e-15:
        return -1.5, "slope"
    if abs(lambda0) < b:
        return -1.0, "slope"
    return 0.0, "slope"


def cmd_resonance(cfg) -> Outcome:
    """delta sweep of ||phi_delta||^2 with slope, limit and decay checks."""
    g = _geometry(cfg)
    b = bound(g.theta0)
    src = _source(g, cfg)
    lam0 = cfg["lambda0_value"]
    deltas = _deltas(cfg)
    fit = rate_fit(g, src, lam0, deltas)
    expected, which = _expected_slope(g, src, lam0)
    measured = fit.log_corrected_slope if which == "log_corrected_slope" else fit.slope
    checks = {
        "slope": {
            "measured": measured,
            "expected": expected,
            "kind": which,
            "tol": cfg["slope_tol"],
            "passed": bool(abs(measured - expected) <= cfg["slope_tol"]),
        }
    }
    if 0 < abs(lam0) < b:
        ref = interior_limit(g, src, lam0)
        rel = abs(fit.limit_constant - ref) / abs(ref)
        checks["limit"] = {
            "extrapolated": fit.limit_constant,
            "closed_form": ref,
            "rel_error": rel,
            "tol": cfg["limit_tol"],
            "passed": bool(rel <= cfg["limit_tol"]),
        }
    elif abs(abs(lam0) - b) < 1e-15:
        c = fit.limit_constant
        checks["limit"] = {
            "extrapolated": c,
            "passed": bool(math.isfinite(c) and c > 0),
        }
    if abs(lam0) <= b:
        dn = never_order_check(g, src, lam0, deltas)
        ratio = dn[-1] / dn[0]
        checks["never_order"] = {
            "delta_norm": dn,
            "monotone": bool(np.all(np.diff(dn) < 0)),
            "final_ratio": ratio,
            "tol": cfg["decay_ratio"],
            "passed": bool(np.all(np.diff(dn) < 0) and ratio < cfg["decay_ratio"]),
        }
    passed = all(c["passed"] for c in checks.values())
    summary = {
        "b": b,
        "lambda0": lam0,
        "source": {"x1": src.z.real, "x2": src.z.imag, "depth": src.depth(g), "a1": src.a[0], "a2": src.a[1]},
        "slope": fit.slope,
        "log_corrected_slope": fit.log_corrected_slope,
        "limit_constant": fit.limit_constant,
        "exponent": fit.exponent,
        "checks": checks,
        "passed": passed,
    }
    rows = list(zip(fit.deltas, fit.values, fit.deltas * fit.values, fit.local_slopes))
    header = ["delta", "phi_norm_sq", "delta_phi_norm_sq", "local_slope"]
    out = Path(cfg["out"])
    files = []
    if cfg["format"] == "json":
        files.append(out / "resonance.json")
        write_json(files[-1], {**summary, "sweep": {h: [r[i] for r in rows] for i, h in enumerate(header)}}, cfg)
    else:
        files.append(out / "resonance_sweep.csv")
        write_csv(files[-1], header, rows, cfg, {"b": b, "lambda0": lam0})
        files.append(out / "resonance_summary.json")
        write_json(files[-1], summary, cfg)
    return Outcome(EXIT_OK if passed else EXIT_CHECK, [str(f) for f in files], summary)


def cmd_validate(cfg) -> Outcome:
    """Run every consistency check; exit 1 listing the failures."""
    g = _geometry(cfg)
    grid = XiGrid(cfg["L"], cfg["N"])
    mesh = build_mesh(g, cfg["M"], cfg["beta"], theta0_floor=cfg["theta0_floor"])
    results = run_all(g, assemble(g, mesh), grid, calderon_tol=cfg["calderon_tol"])
    failed = [r.name for r in results if not r.passed]
    summary = {"checks": [r.to_dict() for r in results], "failed": failed, "passed": not failed}
    out = Path(cfg["out"])
    files = []
    if cfg["format"] == "json":
        files.append(out / "validate.json")
        write_json(files[-1], summary, cfg)
    else:
        files.append(out / "validate.csv")
        _write_validate_csv(files[-1], [(r.name, r.value, r.tol, r.passed) for r in results], cfg)
    return Outcome(EXIT_CHECK if failed else EXIT_OK, [str(f) for f in files], summary)


def _write_validate_csv(path: Path, rows, cfg) -> None:
    lines = [f"# {k}={v}" for k, v in _echo(cfg).items()]
    lines.append("check,value,tol,passed")
    for name, v, t, p in rows:
        lines.append(f"{name},{fmt(v)},{fmt(t)},{fmt(bool(p))}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_field(cfg) -> Outcome:
    """u_delta and |grad u_delta| on a tensor grid, outside a guard band."""
    g = _geometry(cfg)
    n1, n2 = cfg["x1_count"], cfg["x2_count"]
    if n1 == 0 or n2 == 0:
        return Outcome(EXIT_OK, [], {"points": 0, "skipped": 0, "written": 0})
    src = _source(g, cfg)
    delta = cfg["delta"]
    query = ResonanceQuery(src, cfg["lambda0_value"], (max(delta, 1e-300),), cfg["eps_c"])
    x1 = np.linspace(cfg["x1_min"], cfg["x1_max"], n1)
    x2 = np.linspace(cfg["x2_min"], cfg["x2_max"], n2)
    grid = XiGrid(cfg["L"], cfg["N"])
    X1, X2 = np.meshgrid(x1, x2, indexing="xy")
    z = X1 + 1j * X2
    keep = boundary_distance(g, z) > cfg["guard"] * g.a
    keep &= np.abs(z - src.z) > cfg["guard"] * g.a
    vals = np.full(z.shape, np.nan + 0j)
    grads = np.full(z.shape, np.nan)
    if np.any(keep):
        _, _, v, gr = field_map(g, query, x1, x2, delta, grid, with_gradient=True)
        vals[keep], grads[keep] = v[keep], gr[keep]
    # points the strip grid cannot reach (very close to a corner) also count as skipped
    keep &= np.isfinite(vals) & np.isfinite(grads)
    skipped = int(z.size - np.count_nonzero(keep))
    rows = [
        (X1[k], X2[k], vals[k].real, vals[k].imag, grads[k]) for k in zip(*np.nonzero(keep))
    ]
    summary = {
        "points": int(z.size),
        "skipped": skipped,
        "written": len(rows),
        "max_abs_u": float(np.max(np.abs(vals[keep]))) if rows else None,
        "max_grad": float(np.max(grads[keep])) if rows else None,
    }
    out = Path(cfg["out"])
    files = []
    header = ["x1", "x2", "re", "im", "grad_abs"]
    if cfg["format"] == "json":
        files.append(out / "field.json")
        write_json(files[-1], {**summary, "field": {h: [r[i] for r in rows] for i, h in enumerate(header)}}, cfg)
    else:
        files.append(out / "field.csv")
        write_csv(files[-1], header, rows, cfg, {"skipped": skipped})
        files.append(out / "field_summary.json")
        write_json(files[-1], summary, cfg)
    return Outcome(EXIT_OK, [str(f) for f in files], summary)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "resonance": cmd_resonance,
    "validate": cmd_validate,
    "field": cmd_field,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="npdisks", description="NP operator on two intersecting disks")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--theta0", type=float, metavar="F")
    p.add_argument("--radius", type=float, metavar="F")
    p.add_argument("--threads", type=int, metavar="K")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    return p


def _error(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        raw: dict[str, Any] = read_config_file(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = (t.strip() for t in item.split("=", 1))
            raw[k] = v
        for key in ("out", "format", "theta0", "radius", "threads"):
            v = getattr(args, key)
            if v is not None:
                raw[key] = v
        cfg = resolve_config(args.command, raw)
    except ConfigError as exc:
        return _error("ConfigError", str(exc), EXIT_USAGE)

    try:
        if not (args.command == "field" and (cfg["x1_count"] == 0 or cfg["x2_count"] == 0)):
            Path(cfg["out"]).mkdir(parents=True, exist_ok=True)
        if cfg["threads"] > 0:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=cfg["threads"]):
                outcome = COMMANDS[args.command](cfg)
        else:
            outcome = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        return _error("ConfigError", str(exc), EXIT_USAGE)
    except (ValueError, ArithmeticError) as exc:
        # module precondition errors (geometry, source, sweep, mesh) are usage errors
        return _error(type(exc).__name__, f"{args.command}: {exc}", EXIT_USAGE)
    except OSError as exc:
        return _error("OSError", f"{args.command}: {exc}", EXIT_USAGE)

    status = {"command": args.command, "exit_code": outcome.code, "files": outcome.files}
    if args.command == "validate":
        status["failed"] = outcome.summary["failed"]
    if args.command == "field":
        status["skipped"] = outcome.summary["skipped"]
    if args.command == "resonance":
        status["passed"] = outcome.summary["passed"]
    print(json.dumps(status, sort_keys=True))
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
