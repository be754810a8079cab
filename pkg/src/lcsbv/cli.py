"""Command-line front end.

Usage::

    lcsbv <scenario> [config.cfg] [--set key=value ...] [--out DIR] [--jobs N]
    lcsbv run config.cfg            # scenario taken from the ``scenario`` key

Config files are flat ``key = value`` lines; ``#`` starts a comment and
dotted keys group parameters (``bulk.a = -1.0``).  Lists are comma
separated.  Exit status: 0 success, 2 invalid input, 3 solver failure
(outputs are still written).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from . import energy as en
from . import experiments as ex
from .errors import InvalidInputError, InvalidModelError, UnderResolvedError
from .grid import Field, GridSpec, read_field, write_field
from .minimize import MinimizeOptions, minimize_director
from .models import FrankModel, WAlphaModel
from .orient import LineField, lift_is_valid, try_orient
from .qtensor import q_matrix

OUTPUT_ENV = "LCSBV_OUTPUT_ROOT"
EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


class ConfigError(InvalidInputError):
    pass


class SolverFailure(RuntimeError):
    pass


# ------------------------------------------------------------------ schema

def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


COMMON = {"scenario": (str, None), "seed": (int, 0), "output.dir": (str, "lcsbv_out")}

SLAB = {"slab.s1": (float, 1.0), "slab.s2": (float, 1.0), "slab.L3": (float, 1.0),
        "slab.nodes": (int, 200), "bulk.a": (float, -1.0), "bulk.b": (float, 1.0),
        "bulk.c": (float, 1.0), "jump.k": (float, 1.0), "jump.r": (float, 0.5)}

SCHEMAS = {
    "energy": {"model": (str, "frank"), "frank.K1": (float, 1.0), "frank.K2": (float, 1.0),
               "frank.K3": (float, 1.0), "frank.K4": (float, 0.0), "frank.q0": (float, 0.0),
               "growth.p": (float, 1.5), "growth.alpha": (float, 0.1),
               "n": (_floats, [0.0, 0.0, 1.0]), "grad": (_floats, [0.0] * 9),
               "q": (_floats, [0.0] * 5), "q_minus": (_floats, [0.0] * 5),
               "normal": (_floats, [0.0, 0.0, 1.0]), "bulk.a": (float, -1.0),
               "bulk.b": (float, 1.0), "bulk.c": (float, 1.0), "jump.k": (float, 1.0),
               "jump.r": (float, 0.5)},
    "minimize": {"model": (str, "frank"), "frank.K": (float, 1.0), "growth.p": (float, 1.5),
                 "growth.alpha": (float, 0.1), "grid.cells": (_floats, [6, 6, 6]),
                 "boundary": (_floats, [0.0, 0.0, 1.0]), "max_iter": (int, 5000),
                 "tol": (float, 1e-8)},
    "reconstruct": SLAB | {"deltas": (_floats, [1.0, 0.3, 0.1, 0.03]), "control": (float, 10.0),
                           "cross_check": (_bool, False)},
    "slab-crossover": SLAB | {"deltas": (_floats, [1.0, 2.5, 5.0, 10.0]), "refinements": (int, 2),
                              "bisect_tol": (float, 1e-3)},
    "defect-scaling": {"model": (str, "quadratic"), "defect": (str, "disclination"),
                       "cutoffs": (_floats, [0.1, 0.05, 0.025]), "nodes": (int, 1000),
                       "K": (float, 1.0), "growth.p": (float, 1.5), "growth.alpha": (float, 1.0),
                       "R": (float, 1.0)},
    "orient": {"field": (str, "annulus"), "s_tol": (float, 1e-3), "angle_tol": (float, 0.1)},
    "smectic": {"smectic.B": (float, 1.0), "smectic.q": (float, 2 * math.pi),
                "smectic.a": (float, -1.0), "smectic.b": (float, 0.0), "smectic.c": (float, 1.0),
                "length": (float, 4.0), "nodes": (int, 256), "bc": (str, "periodic")},
}
SCENARIOS = tuple(SCHEMAS)


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` pairs; later keys override earlier ones."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def resolve(scenario: str, raw: dict) -> dict:
    """Typed config for ``scenario`` with defaults filled in; unknown keys are errors."""
    if scenario not in SCHEMAS:
        raise ConfigError(f"scenario: unknown scenario {scenario!r} (choose from {', '.join(SCENARIOS)})")
    schema = COMMON | SCHEMAS[scenario]
    for key in raw:
        if key not in schema:
            raise ConfigError(f"{key}: unknown key for scenario {scenario!r}")
    cfg = {}
    for key, (typ, default) in schema.items():
        if key in raw:
            try:
                cfg[key] = typ(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: cannot parse {raw[key]!r} ({exc})") from None
        else:
            cfg[key] = default
    if cfg["scenario"] not in (None, scenario):
        raise ConfigError(f"scenario: config names {cfg['scenario']!r} but {scenario!r} was requested")
    cfg["scenario"] = scenario
    return cfg


# ------------------------------------------------------------------ scenarios

def _slab(cfg) -> ex.SlabSpec:
    return ex.SlabSpec(s1=cfg["slab.s1"], s2=cfg["slab.s2"], L3=cfg["slab.L3"],
                       bulk=en.BulkParams(cfg["bulk.a"], cfg["bulk.b"], cfg["bulk.c"]),
                       k=cfg["jump.k"], r=cfg["jump.r"], nodes=cfg["slab.nodes"], seed=cfg["seed"])


def _run_energy(cfg, jobs):
    model = cfg["model"]
    if model in ("frank", "walpha"):
        K = en.FrankConstants(cfg["frank.K1"], cfg["frank.K2"], cfg["frank.K3"], cfg["frank.K4"],
                              cfg["frank.q0"])
        n, G = np.array(cfg["n"]), np.array(cfg["grad"])
        if n.shape != (3,) or G.shape != (9,):
            raise ConfigError("n/grad: need 3 and 9 numbers")
        if abs(np.linalg.norm(n) - 1) > 1e-8:
            raise ConfigError("n: director must be a unit vector")
        G = G.reshape(3, 3)
        if model == "frank":
            val = en.oseen_frank(n, G, K)
        else:
            val = en.w_alpha(n, G, K, en.GrowthModParams(cfg["growth.p"], cfg["growth.alpha"]))
        out = {"density": float(val)}
    elif model == "bulk":
        Q = q_matrix(np.array(cfg["q"]))
        out = {"density": float(en.ldg_bulk(Q, en.BulkParams(cfg["bulk.a"], cfg["bulk.b"], cfg["bulk.c"])))}
    elif model == "jump":
        J = en.JumpEnergyParams(cfg["jump.k"], cfg["jump.r"])
        nu = np.array(cfg["normal"])
        val = en.jump_energy(q_matrix(np.array(cfg["q"])), q_matrix(np.array(cfg["q_minus"])),
                             nu / np.linalg.norm(nu), J)
        out = {"density": float(val)}
    else:
        raise ConfigError(f"model: unknown model {model!r} (frank, walpha, bulk, jump)")
    return ex.ExperimentRecord("energy", {}, out, {}), False


def _run_minimize(cfg, jobs):
    cells = tuple(int(c) for c in cfg["grid.cells"])
    grid = GridSpec(cells, (1.0,) * len(cells))
    bnd = np.array(cfg["boundary"], float)
    if bnd.shape != (3,) or abs(np.linalg.norm(bnd) - 1) > 1e-8:
        raise ConfigError("boundary: need a unit 3-vector")
    K = en.FrankConstants.one_constant(cfg["frank.K"])
    if cfg["model"] == "frank":
        model = FrankModel(K)
    elif cfg["model"] == "walpha":
        model = WAlphaModel(K, en.GrowthModParams(cfg["growth.p"], cfg["growth.alpha"]))
    else:
        raise ConfigError(f"model: unknown model {cfg['model']!r} (frank, walpha)")
    rng = np.random.default_rng(cfg["seed"])
    v = rng.normal(size=(grid.n_nodes, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    fixed = grid.boundary_mask().ravel()
    v[fixed] = bnd
    rep = minimize_director(Field(grid, "director", v), model,
                            MinimizeOptions(max_iter=cfg["max_iter"], tol=cfg["tol"], seed=cfg["seed"]))
    rec = ex.ExperimentRecord(
        "minimize", {}, rep.to_dict(), {"converged": rep.converged},
        {"iteration": list(range(len(rep.energy_trace))), "energy": rep.energy_trace,
         "projected_grad_norm": rep.grad_trace},
        {"x": "iteration", "y": ["energy"]})
    return rec, not rep.converged


def _run_reconstruct(cfg, jobs):
    rec = ex.linear_limit_sweep(_slab(cfg), cfg["deltas"], cfg["control"], jobs=jobs,
                                cross_check=cfg["cross_check"])
    return rec, not rec.checks["all_converged"]


def _run_crossover(cfg, jobs):
    rec = ex.crossover_sweep(_slab(cfg), cfg["deltas"], refinements=cfg["refinements"],
                             bisect_tol=cfg["bisect_tol"], jobs=jobs)
    return rec, False


def _run_defects(cfg, jobs):
    rec = ex.defect_energy_scaling(cfg["model"], cfg["defect"], cfg["cutoffs"], cfg["nodes"],
                                   cfg["K"], cfg["growth.p"], cfg["growth.alpha"], cfg["R"],
                                   seed=cfg["seed"])
    failed = any(r not in ("converged", "evaluated") for r in rec.outputs["reasons"])
    return rec, failed


def load_line_field(name: str) -> LineField:
    if name == "annulus":
        text = resources.files("lcsbv").joinpath("data/annulus_half.json").read_text()
    else:
        try:
            text = Path(name).read_text()
        except OSError as exc:
            raise ConfigError(f"field: cannot read {name!r} ({exc.strerror})") from None
    data = json.loads(text)
    if "directions" in data:
        return LineField.from_dict(data)
    # a field header written next to its CSV
    return LineField.from_field(read_field(Path(name).with_suffix("")))


def _run_orient(cfg, jobs):
    f = load_line_field(cfg["field"])
    f = LineField(f.grid, f.directions, f.order, cfg["s_tol"], cfg["angle_tol"])
    rep = try_orient(f)
    out = rep.to_dict()
    out["lift_valid"] = lift_is_valid(f, rep)
    rec = ex.ExperimentRecord("orient", {}, out, {"lift_valid": out["lift_valid"]})
    return rec, False, lambda dest: write_field(rep.oriented(f), Path(dest) / "orient_oriented",
                                                extra={"orientable": bool(rep.orientable)})


def _run_smectic(cfg, jobs):
    S = en.SmecticParams(B=cfg["smectic.B"], q=cfg["smectic.q"], a=cfg["smectic.a"],
                         b=cfg["smectic.b"], c=cfg["smectic.c"])
    rec = ex.smectic_profile(S, cfg["length"], cfg["nodes"], cfg["bc"], cfg["seed"])
    return rec, not rec.checks["converged"]


RUNNERS = {"energy": _run_energy, "minimize": _run_minimize, "reconstruct": _run_reconstruct,
           "slab-crossover": _run_crossover, "defect-scaling": _run_defects,
           "orient": _run_orient, "smectic": _run_smectic}


def output_dir(cfg) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg["output.dir"])


def run(scenario: str, raw: dict, jobs: int = 1, out: Path | None = None):
    """Validate, dispatch and write outputs.  Returns ``(exit_code, paths, message)``."""
    try:
        cfg = resolve(scenario, raw)
        t0 = time.time()
        record, failed, *post = RUNNERS[scenario](cfg, jobs)
    except (InvalidInputError, InvalidModelError, UnderResolvedError) as exc:
        return EXIT_INVALID, {}, f"invalid input: {exc}"
    record.inputs = dict(record.inputs) | {"config": {k: v for k, v in cfg.items() if k != "output.dir"}}
    dest = out or output_dir(cfg)
    paths = record.write(dest)
    for writer in post:
        writer(dest)
    sidecar = Path(dest) / f"{record.name}.run.json"
    sidecar.write_text(json.dumps({"started": t0, "seconds": time.time() - t0}, sort_keys=True) + "\n")
    paths["run"] = str(sidecar)
    if failed:
        return EXIT_SOLVER, paths, f"solver failure in stage {scenario!r}; partial outputs written"
    return EXIT_OK, paths, "ok"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="lcsbv", description="Nematic and smectic energy toolkit")
    p.add_argument("scenario", choices=SCENARIOS + ("run",))
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--out", help="output directory (overrides output.dir and $%s)" % OUTPUT_ENV)
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    args = p.parse_args(argv)

    raw = {}
    if args.config:
        try:
            raw = parse_config_text(Path(args.config).read_text())
        except OSError as exc:
            print(f"config: cannot read {args.config!r} ({exc.strerror})", file=sys.stderr)
            return EXIT_INVALID
        except ConfigError as exc:
            print(f"invalid input: {exc}", file=sys.stderr)
            return EXIT_INVALID
    for item in args.set:
        if "=" not in item:
            print(f"invalid input: --set {item!r} needs KEY=VALUE", file=sys.stderr)
            return EXIT_INVALID
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    scenario = args.scenario
    if scenario == "run":
        scenario = raw.get("scenario")
        if scenario is None:
            print("invalid input: scenario: missing (set 'scenario = ...')", file=sys.stderr)
            return EXIT_INVALID
    code, paths, msg = run(scenario, raw, args.jobs, Path(args.out) if args.out else None)
    if code == EXIT_OK:
        for k in sorted(paths):
            print(f"{k}: {paths[k]}")
    else:
        print(msg, file=sys.stderr)
        for k in sorted(paths):
            print(f"{k}: {paths[k]}")
    return code


if __name__ == "__main__":
    sys.exit(main())
