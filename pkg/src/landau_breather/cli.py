"""Batch front end.

    landau-breather --config run.yaml [--output DIR] [--seed N] [--jobs N] [--command NAME]

A config is a YAML document with top-level keys ``command``, ``output_dir``,
``base_seed``, ``parallelism`` and a ``parameters`` mapping.  Numeric fields
accept arithmetic in ``pi`` (e.g. ``4*pi``).
"""
from __future__ import annotations

import argparse
import ast
import concurrent.futures
import contextlib
import functools
import math
import operator
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .errors import ConfigError, LandauBreatherError
from .lattice import (GAUGES, assemble_free_hamiltonian, assemble_random_hamiltonian,
                      make_geometry)
from .model import (DisorderDistribution, PotentialKind, breather_sup_bound,
                    potential_by_name, reference_claims, sample_disorder,
                    verify_hypotheses)
from .seeding import derive_seed
from .spectral import eigendecompose, extract_level_projector
from .ucp import (check_trace_bound, compute_lambda0, estimate_c1, physical_trace_instance,
                  random_trace_instance, write_trace_csv)
from .wegner import (WegnerExperiment, measure_c_tilde, nested_intervals, run_ids,
                     run_wegner, write_json)

COMMANDS = ("verify-potential", "spectrum", "ucp", "trace-bound", "wegner", "ids")

# ---------------------------------------------------------------------------
# numeric expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt}


def _eval_node(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def number(value) -> float:
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return float(_eval_node(ast.parse(value, mode="eval").body))
    raise ValueError(f"expected a number, got {type(value).__name__}")


# ---------------------------------------------------------------------------
# schema

# field -> (kind, default); kind is one of "float", "int", "bool", "str", "floats", "ints",
# "intervals"; default None means optional, REQUIRED means the field must be given
REQUIRED = object()

_DISORDER = {
    "potential": ("str", "hat"),
    "omega_minus": ("float", 0.2),
    "omega_plus": ("float", 0.4),
}

SCHEMAS = {
    "verify-potential": {
        **_DISORDER,
        "t_resolution": ("int", 16),
        "x_resolution": ("int", 32),
    },
    "spectrum": {
        **_DISORDER,
        "b_field": ("float", REQUIRED),
        "box_multiple": ("int", 1),
        "grid_points_per_unit": ("int", 16),
        "gauge": ("str", "x"),
        "coupling": ("float", 0.0),
        "levels": ("ints", [1]),
        "gap_fraction": ("float", 0.25),
        "export_matrix": ("bool", False),
    },
    "ucp": {
        "b_field": ("float", REQUIRED),
        "level": ("int", 1),
        "radius": ("float", 0.2),
        "box_multiples": ("ints", [1, 2, 3]),
        "grid_points_per_unit": ("int", 8),
        "samples": ("int", 5),
        "gap_fraction": ("float", 0.25),
    },
    "trace-bound": {
        **_DISORDER,
        "instances": ("int", 1000),
        "max_dim": ("int", 40),
        "physical_instances": ("int", 0),
        "b_field": ("float", 4 * math.pi),
        "grid_points_per_unit": ("int", 8),
        "radius": ("float", 0.2),
    },
    "wegner": {
        **_DISORDER,
        "b_field": ("float", REQUIRED),
        "grid_points_per_unit": ("int", 8),
        "coupling": ("float", None),
        "coupling_fraction": ("float", None),
        "certified": ("bool", False),
        "c_tilde": ("float", None),
        "ucp_radius": ("float", 0.2),
        "ucp_samples": ("int", 5),
        "ucp_box_multiples": ("ints", [1, 2]),
        "e0": ("float", None),
        "intervals": ("intervals", None),
        "box_multiples": ("ints", [1, 2]),
        "samples_per_cell": ("int", 50),
    },
}
SCHEMAS["ids"] = {
    **SCHEMAS["wegner"],
    "box_multiples": ("ints", [1]),
    "energy_min": ("float", None),
    "energy_max": ("float", None),
    "energy_points": ("int", 201),
    "epsilons": ("floats", None),
}


@dataclass
class RunConfig:
    command: str
    parameters: dict
    output_dir: Path
    base_seed: int = 0
    parallelism: int = 1
    source: str | None = None
    lines: dict = field(default_factory=dict, repr=False)

    def resolved(self) -> dict:
        return {
            "command": self.command,
            "output_dir": str(self.output_dir),
            "base_seed": self.base_seed,
            "parallelism": self.parallelism,
            "parameters": self.parameters,
        }


def _key_lines(text: str) -> dict:
    """Line numbers (1-based) of top-level and ``parameters.*`` keys."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if not isinstance(root, yaml.MappingNode):
        return lines
    for key, value in root.value:
        lines[key.value] = key.start_mark.line + 1
        if key.value == "parameters" and isinstance(value, yaml.MappingNode):
            for k2, _ in value.value:
                lines[f"parameters.{k2.value}"] = k2.start_mark.line + 1
    return lines


def _coerce(kind, value, name, line):
    try:
        if kind == "float":
            return number(value)
        if kind == "int":
            if isinstance(value, bool) or not float(number(value)).is_integer():
                raise ValueError("expected an integer")
            return int(number(value))
        if kind == "bool":
            if not isinstance(value, bool):
                raise ValueError("expected true or false")
            return value
        if kind == "str":
            if not isinstance(value, str):
                raise ValueError("expected a string")
            return value
        if kind == "floats":
            return [number(v) for v in value]
        if kind == "ints":
            out = [int(number(v)) for v in value]
            if any(o != number(v) for o, v in zip(out, value)):
                raise ValueError("expected integers")
            return out
        if kind == "intervals":
            out = [[number(a), number(b)] for a, b in value]
            return out
    except (ValueError, TypeError, SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid value {value!r}: {exc}", field=name, line=line) from None
    raise AssertionError(kind)


def _validate(cfg: RunConfig) -> None:
    p = cfg.parameters
    line = cfg.lines.get

    def bad(name, msg):
        raise ConfigError(msg, field=f"parameters.{name}", line=line(f"parameters.{name}"))

    if "potential" in p:
        try:
            kind = PotentialKind(p["potential"])
        except ValueError:
            bad("potential", f"unknown potential {p['potential']!r}; choose 'hat' or 'smooth-bump'")
        if kind is PotentialKind.CUSTOM:
            bad("potential", "custom potentials are not available from a config file")
    if "omega_minus" in p and not 0 < p["omega_minus"] <= p["omega_plus"] < 0.5:
        bad("omega_minus", "need 0 < omega_minus <= omega_plus < 1/2")
    if "omega_minus" in p and p["omega_minus"] == p["omega_plus"]:
        bad("omega_plus", "the disorder law needs omega_minus < omega_plus")
    for name in ("b_field", "radius", "ucp_radius"):
        if name in p and p[name] is not None and p[name] <= 0:
            bad(name, "must be positive")
    for name in ("radius", "ucp_radius"):
        if name in p and not p[name] < 0.5:
            bad(name, "must be below 1/2")
    for name in ("t_resolution", "x_resolution"):
        if name in p and p[name] < 16:
            bad(name, "must be at least 16")
    for name in ("samples", "samples_per_cell", "instances", "max_dim", "grid_points_per_unit",
                 "box_multiple", "level", "ucp_samples", "energy_points"):
        if name in p and p[name] < 1:
            bad(name, "must be a positive integer")
    for name in ("box_multiples", "ucp_box_multiples", "levels"):
        if name in p and (not p[name] or min(p[name]) < 1):
            bad(name, "must be a nonempty list of positive integers")
    if "gauge" in p and p["gauge"] not in GAUGES:
        bad("gauge", f"gauge must be one of {GAUGES}")
    if "grid_points_per_unit" in p and "b_field" in p:
        for m in p.get("box_multiples", [p.get("box_multiple", 1)]):
            try:
                make_geometry(p["b_field"], m, p["grid_points_per_unit"])
            except LandauBreatherError as exc:
                bad("grid_points_per_unit", str(exc))

    if cfg.command in ("wegner", "ids"):
        b = p["b_field"]
        if p["coupling"] is None and p["coupling_fraction"] is None:
            bad("coupling", "give either coupling or coupling_fraction (of lambda0)")
        if p["coupling"] is not None and p["coupling_fraction"] is not None:
            bad("coupling_fraction", "coupling and coupling_fraction are mutually exclusive")
        if p["coupling"] is not None and p["coupling"] < 0:
            bad("coupling", "must be nonnegative")
        if p["coupling_fraction"] is not None and not 0 <= p["coupling_fraction"]:
            bad("coupling_fraction", "must be nonnegative")
        if p["intervals"] is None:
            p["intervals"] = [list(i) for i in nested_intervals(b, b)]
        if p["e0"] is None:
            p["e0"] = max(hi for _, hi in p["intervals"]) if cfg.command == "wegner" else 2 * b
        for a, hi in p["intervals"]:
            if not a <= hi:
                bad("intervals", f"interval [{a}, {hi}] is empty")
            if hi - a > b / 2 + 1e-12:
                bad("intervals", f"interval [{a}, {hi}] is longer than B/2 = {b / 2:.6g}")
            if hi > p["e0"] + 1e-12:
                bad("intervals", f"interval [{a}, {hi}] exceeds E0 = {p['e0']:.6g}")
        if p["certified"] and p["coupling"] is not None and p["c_tilde"] is not None:
            lam0 = compute_lambda0(b, p["c_tilde"], breather_sup_bound(potential_by_name(p["potential"])))
            if not p["coupling"] < lam0:
                bad("coupling", f"coupling {p['coupling']:.6g} is not below the critical "
                                f"coupling lambda0 = B sqrt(C~/(32 V_inf^2 (C~+2))) = {lam0:.6g}")
        if p["certified"] and p["coupling_fraction"] is not None and not p["coupling_fraction"] < 1:
            bad("coupling_fraction", "certified regime needs coupling_fraction < 1")
    if cfg.command == "ids":
        if p["energy_min"] is None:
            p["energy_min"] = 0.0
        if p["energy_max"] is None:
            p["energy_max"] = p["e0"]
        if not p["energy_min"] < p["energy_max"] <= p["e0"] + 1e-12:
            bad("energy_max", "need energy_min < energy_max <= e0")


def parse_config(path=None, text: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Load, default, coerce and validate a run configuration."""
    overrides = overrides or {}
    if text is None:
        if path is None:
            raise ConfigError("no configuration given")
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {exc}", line=mark.line + 1 if mark else None) from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping")
    lines = _key_lines(text)
    unknown = set(doc) - {"command", "output_dir", "base_seed", "parallelism", "parameters"}
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError("unknown top-level key", field=name, line=lines.get(name))

    command = overrides.get("command") or doc.get("command")
    if command is None:
        raise ConfigError("missing command", field="command")
    command = str(command).replace("_", "-").lower()
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}",
                          field="command", line=lines.get("command"))

    raw = doc.get("parameters") or {}
    if not isinstance(raw, dict):
        raise ConfigError("parameters must be a mapping", field="parameters", line=lines.get("parameters"))
    schema = SCHEMAS[command]
    extra = set(raw) - set(schema)
    if extra:
        name = sorted(extra)[0]
        raise ConfigError(f"not a parameter of command {command!r}",
                          field=f"parameters.{name}", line=lines.get(f"parameters.{name}"))
    params = {}
    for name, (kind, default) in schema.items():
        key = f"parameters.{name}"
        if name in raw and raw[name] is not None:
            params[name] = _coerce(kind, raw[name], key, lines.get(key))
        elif default is REQUIRED:
            raise ConfigError("required parameter is missing", field=key)
        else:
            params[name] = default

    seed = overrides.get("seed", doc.get("base_seed", 0))
    jobs = overrides.get("jobs", doc.get("parallelism", 1))
    out = overrides.get("output") or doc.get("output_dir") or "out"
    try:
        seed = int(seed)
        jobs = int(jobs)
    except (TypeError, ValueError):
        raise ConfigError("base_seed and parallelism must be integers") from None
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("base_seed must be an unsigned 64-bit integer", field="base_seed",
                          line=lines.get("base_seed"))
    if jobs < 1:
        raise ConfigError("parallelism must be positive", field="parallelism", line=lines.get("parallelism"))
    cfg = RunConfig(command, params, Path(out), seed, jobs, str(path) if path else None, lines)
    _validate(cfg)
    return cfg


# ---------------------------------------------------------------------------
# pipelines


def _dist(p) -> DisorderDistribution:
    return DisorderDistribution.uniform(p["omega_minus"], p["omega_plus"])


def _run_verify(cfg, out, mapper):
    p = cfg.parameters
    u, dist = potential_by_name(p["potential"]), _dist(p)
    cert = verify_hypotheses(u, dist, p["t_resolution"], p["x_resolution"])
    write_json(out / "certificate.json", cert.to_json())
    write_json(out / "certificate_report.json", {
        "potential": u.name, "omega_minus": dist.omega_minus, "omega_plus": dist.omega_plus,
        "c_u": cert.c_u, "r": cert.ball_radius, "per_t_constants": list(cert.per_t),
        "reference": reference_claims(u.kind, dist),
    })
    return {"c_u": cert.c_u, "r": cert.ball_radius}


def _run_spectrum(cfg, out, mapper):
    p = cfg.parameters
    geom = make_geometry(p["b_field"], p["box_multiple"], p["grid_points_per_unit"])
    if p["coupling"] > 0:
        sample = sample_disorder(_dist(p), geom.box_side, derive_seed(cfg.base_seed, 0))
        h = assemble_random_hamiltonian(geom, potential_by_name(p["potential"]), sample,
                                        p["coupling"], p["gauge"])
    else:
        h = assemble_free_hamiltonian(geom, p["gauge"])
    spec = eigendecompose(h, want_vectors=True)
    spec.to_csv(out / "spectrum.csv")
    if p["export_matrix"]:
        h.save(out / "hamiltonian.bin")
    levels = {}
    if p["coupling"] == 0:
        for n in p["levels"]:
            proj = extract_level_projector(spec, geom, n, p["gap_fraction"])
            proj.save(out / f"projector_level{n}.bin")
            levels[str(n)] = {"rank": proj.rank, "cluster_width": proj.cluster_width,
                              "mean_energy": float(np.mean(proj.eigenvalues)),
                              "continuum_energy": proj.level_energy}
    return {"geometry": geom.describe(), "dimension": h.dimension, "levels": levels}


def _run_ucp(cfg, out, mapper):
    p = cfg.parameters
    geoms = [make_geometry(p["b_field"], m, p["grid_points_per_unit"]) for m in p["box_multiples"]]
    rep = estimate_c1(geoms, p["level"], p["radius"], p["samples"], cfg.base_seed,
                      p["gap_fraction"], mapper=mapper)
    rep.to_csv(out / "ucp.csv")
    return {"level": rep.level_index, "radius": rep.radius, "c1_min": rep.c1_min,
            "c1_max": rep.c1_max, "ratio": rep.c1_max / rep.c1_min if rep.c1_min > 0 else None}


def _trace_abstract(seed, max_dim):
    return check_trace_bound(random_trace_instance(seed, max_dim))


def _trace_physical(seed, geom, u, dist, radius):
    return check_trace_bound(physical_trace_instance(geom, u, dist, seed, radius))


def _run_trace(cfg, out, mapper):
    p = cfg.parameters
    seeds = [derive_seed(cfg.base_seed, 0, k) for k in range(p["instances"])]
    results = list(mapper(functools.partial(_trace_abstract, max_dim=p["max_dim"]), seeds))
    write_trace_csv(results, out / "trace_bound.csv")
    summary = _trace_summary(results)
    if p["physical_instances"]:
        geom = make_geometry(p["b_field"], 1, p["grid_points_per_unit"])
        pseeds = [derive_seed(cfg.base_seed, 1, k) for k in range(p["physical_instances"])]
        phys = list(mapper(functools.partial(_trace_physical, geom=geom, u=potential_by_name(p["potential"]),
                                 dist=_dist(p), radius=p["radius"]), pseeds))
        write_trace_csv(phys, out / "trace_bound_physical.csv")
        summary["physical"] = _trace_summary(phys)
    return summary


def _trace_summary(results):
    met = [r for r in results if r.precondition_met]
    return {"instances": len(results), "precondition_met": len(met),
            "holds": sum(r.holds for r in met),
            "holds_rate": (sum(r.holds for r in met) / len(met)) if met else None}


def _experiment(cfg, mapper) -> tuple[WegnerExperiment, dict]:
    p = cfg.parameters
    u = potential_by_name(p["potential"])
    b = p["b_field"]
    info = {}
    c_tilde = p["c_tilde"]
    if c_tilde is None and (p["coupling_fraction"] is not None or p["certified"]):
        c_tilde = measure_c_tilde(b, p["e0"], p["ucp_radius"], p["grid_points_per_unit"],
                                  p["ucp_samples"], cfg.base_seed, p["ucp_box_multiples"], mapper)
        info["c_tilde_measured"] = c_tilde
    coupling = p["coupling"]
    if coupling is None:
        coupling = p["coupling_fraction"] * compute_lambda0(b, c_tilde, breather_sup_bound(u))
    exp = WegnerExperiment(b, p["grid_points_per_unit"], u, _dist(p), coupling,
                           tuple(tuple(i) for i in p["intervals"]), tuple(p["box_multiples"]),
                           p["samples_per_cell"], cfg.base_seed, p["e0"], p["certified"], c_tilde)
    try:
        exp.validate()
    except ValueError as exc:
        raise ConfigError(str(exc), field="parameters.coupling") from None
    info.update({"coupling": coupling, "lambda0": exp.lambda0, "c_tilde": c_tilde})
    return exp, info


def _run_wegner(cfg, out, mapper):
    exp, info = _experiment(cfg, mapper)
    rep = run_wegner(exp, mapper)
    rep.to_csv(out / "wegner_cells.csv")
    rep.plot_data(out / "wegner_loglog.dat")
    summary = {**rep.summary(), **info}
    write_json(out / "wegner.json", summary)
    return {k: summary[k] for k in ("theta_fit", "area_ratio", "envelope_holds", "coupling", "lambda0")}


def _run_ids(cfg, out, mapper):
    p = cfg.parameters
    exp, info = _experiment(cfg, mapper)
    energies = np.linspace(p["energy_min"], p["energy_max"], p["energy_points"])
    est = run_ids(exp, energies, p["epsilons"], mapper)
    est.check_invariants()
    est.to_csv(out / "ids.csv")
    est.holder_csv(out / "ids_holder.csv")
    est.plot_data(out / "ids.dat")
    payload = {"box_side": est.box_side, "holder_modulus": est.holder_modulus, **info}
    write_json(out / "ids.json", payload)
    return payload


PIPELINES = {
    "verify-potential": _run_verify,
    "spectrum": _run_spectrum,
    "ucp": _run_ucp,
    "trace-bound": _run_trace,
    "wegner": _run_wegner,
    "ids": _run_ids,
}


@contextlib.contextmanager
def _mapper(jobs: int):
    if jobs <= 1:
        yield map
        return
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        yield pool.map


def execute(cfg: RunConfig) -> int:
    """Run the configured pipeline; returns the process exit status."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "resolved_config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.resolved(), fh, sort_keys=True)
    start = time.time()
    status, result, error = 0, None, None
    try:
        with _mapper(cfg.parallelism) as mapper:
            result = PIPELINES[cfg.command](cfg, out, mapper)
    except LandauBreatherError as exc:
        status, error = (2 if isinstance(exc, ConfigError) else 1), exc
    except ValueError as exc:
        status, error = 1, exc
    manifest = {
        "command": cfg.command,
        "status": status,
        "base_seed": cfg.base_seed,
        "parallelism": cfg.parallelism,
        "wall_time_s": time.time() - start,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "versions": {"landau_breather": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "result": result,
    }
    write_json(out / "manifest.json", manifest)
    if error is not None:
        write_json(out / "error.json", {
            "error": getattr(error, "code", type(error).__name__),
            "message": str(error),
            "field": getattr(error, "field", None),
        })
        print(f"error: {error}", file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="landau-breather", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--output", help="output directory (overrides output_dir)")
    ap.add_argument("--seed", type=int, help="base seed (overrides base_seed)")
    ap.add_argument("--jobs", type=int, help="worker processes (overrides parallelism)")
    ap.add_argument("--command", choices=COMMANDS, help="pipeline (overrides command)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in (("output", args.output), ("seed", args.seed),
                                   ("jobs", args.jobs), ("command", args.command)) if v is not None}
    try:
        cfg = parse_config(args.config, overrides=overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        out = Path(overrides.get("output", "out"))
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", {"error": exc.code, "message": str(exc),
                                        "field": exc.field, "line": exc.line})
        return 2
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
