"""Batch experiment runner: validated JSON configs in, manifest + CSV tables out.

Every experiment is deterministic; rerunning a config reproduces every numeric
output byte for byte (the manifest's wall_time_s field is the one exception).
The ``seed`` field is part of the schema for forward compatibility and is
echoed into the manifest unused.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .approximation import (
    CoordinateShiftIsometry,
    IdentityIsometry,
    hc_growth,
    rc_lower,
    rc_upper,
)
from .errors import CalabError, ConfigError
from .isometries import (
    classify_ell1,
    classify_linfty,
    empirical_corroboration,
    load_permutation_spec,
    load_phase_spec,
    orbit_census,
)
from .l1geometry import basis_constants, find_l1_witness
from .spaces import COMPLEX, REAL, load_vector_family
from .spin import car_generators, car_l2_identity, car_tensor_l1_identity, hamming_packing, pauli_span_norm, shift_growth_experiment
from .subshifts import entropy_estimate, load_symbolic_system

_SPIN_RNG_SEED = 2024  # internal draws are fixed; the config seed stays unused


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


_COMMON_KEYS = {"experiment", "seed", "output"}

_SCHEMAS = {
    "l1-constant": {
        "required": {"family": dict},
        "optional": {"mesh": _is_number, "method": str},
    },
    "l1-witness": {
        "required": {"family": dict, "K": _is_number, "min_density": (dict, float, int)},
        "optional": {"budget": _is_int, "mesh": _is_number, "method": str},
    },
    "rc-upper": {
        "required": {"family": dict, "delta": _is_number},
        "optional": {},
    },
    "rc-lower": {
        "required": {"family": dict, "delta": _is_number},
        "optional": {"a": _is_number, "mesh": _is_number, "method": str},
    },
    "hc-growth": {
        "required": {"family": dict, "delta": _is_number, "n_max": _is_int, "mode": str},
        "optional": {"system": dict, "a": _is_number, "mesh": _is_number, "method": str},
    },
    "subshift-entropy": {
        "required": {"system": dict, "n_schedule": list, "eps_schedule": list},
        "optional": {"mode": str},
    },
    "spin-check": {
        "required": {},
        "optional": {"n_max": _is_int, "draws": _is_int, "tensor_n_max": _is_int},
    },
    "packing": {
        "required": {"m": _is_int, "delta": _is_number},
        "optional": {"n": _is_int, "n_range": list},
    },
    "perm-classify": {
        "required": {"spec": dict},
        "optional": {"window": list},
    },
    "shift-experiment": {
        "required": {"m": _is_int, "n_max": _is_int, "delta": _is_number},
        "optional": {"field": str},
    },
    "perm-corroborate": {
        "required": {"spec": dict, "window": list, "delta": _is_number},
        "optional": {
            "phases": dict,
            "space": str,
            "probe_points": _is_int,
            "field": str,
            "n_max": _is_int,
        },
    },
}

CATALOG = {
    "l1-constant": "certified upper/lower basis constants and equivalence interval of a vector family",
    "l1-witness": "search an orbit for a dense subset K-equivalent to the standard l1 basis",
    "rc-upper": "contractive-rank upper bound via a greedy dual-ball net",
    "rc-lower": "contractive-rank lower bound from certified l1-equivalence, in units of a",
    "hc-growth": "per-horizon normalized rank bounds along an iterated probe set",
    "subshift-entropy": "separated/spanning counts with spectral oracle for shifts of finite type",
    "spin-check": "span-norm isometry and anticommutation identities for Pauli tensor families",
    "packing": "greedy maximal word packing at Hamming floor 3*n*delta with counting lower bound",
    "perm-classify": "zero-or-infinite entropy verdicts for permutation-and-phase isometries",
    "shift-experiment": "packing growth slopes for the tensor shift probed by circle points",
    "perm-corroborate": "finite-window corroboration of a classifier verdict (growth or witness search)",
}


def validate_config(obj) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    kind = obj.get("experiment")
    if kind not in _SCHEMAS:
        raise ConfigError(f"unknown experiment kind {kind!r}; see `lab list`")
    schema = _SCHEMAS[kind]
    allowed = _COMMON_KEYS | set(schema["required"]) | set(schema["optional"])
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)} for experiment {kind}")
    for key, pred in schema["required"].items():
        if key not in obj:
            raise ConfigError(f"missing required field {key!r}")
        if not _check_type(obj[key], pred):
            raise ConfigError(f"field {key!r} has the wrong type")
    for key, pred in schema["optional"].items():
        if key in obj and not _check_type(obj[key], pred):
            raise ConfigError(f"field {key!r} has the wrong type")
    if "seed" in obj and not _is_int(obj["seed"]):
        raise ConfigError("seed must be an integer")
    if "output" in obj and not isinstance(obj["output"], str):
        raise ConfigError("output must be a directory path string")
    return obj


def _check_type(value, pred):
    if isinstance(pred, tuple):
        return any(_check_type(value, p) for p in pred)
    if pred in (dict, list, str):
        return isinstance(value, pred)
    return pred(value)


# ---------------------------------------------------------------------------
# executors: each returns (manifest_fragment, {table_name: csv_text})
# ---------------------------------------------------------------------------

def _interval_json(iv):
    return {
        "lo": iv.lo,
        "hi": iv.hi if math.isfinite(iv.hi) else None,
        "certificate": iv.certificate.kind,
    }


def _run_l1_constant(cfg):
    family = load_vector_family(cfg["family"])
    bc = basis_constants(family, mesh=cfg.get("mesh"), method=cfg.get("method", "auto"))
    csv = (
        "upper,lower_lo,lower_hi,equivalence_lo,equivalence_hi,certificate\n"
        f"{bc.upper!r},{bc.lower.lo!r},{bc.lower.hi!r},{bc.equivalence.lo!r},"
        f"{bc.equivalence.hi!r},{bc.lower.certificate.kind}\n"
    )
    out = {
        "upper": bc.upper,
        "lower": _interval_json(bc.lower),
        "equivalence": _interval_json(bc.equivalence),
    }
    return out, {"constants": csv}


def _parse_density(v):
    if isinstance(v, dict):
        return Fraction(int(v["num"]), int(v["den"]))
    return Fraction(v).limit_denominator(10**9)


def _run_l1_witness(cfg):
    family = load_vector_family(cfg["family"])
    report = find_l1_witness(
        family,
        float(cfg["K"]),
        _parse_density(cfg["min_density"]),
        budget=cfg.get("budget", 20_000),
        method=cfg.get("method", "auto"),
        mesh=cfg.get("mesh"),
    )
    payload = report.to_json()
    payload["found"] = report.found
    payload["evaluations"] = report.evaluations
    payload["budget_exhausted"] = report.budget_exhausted
    csv = "found,I,density_num,density_den,equivalence_hi\n" + (
        f"{report.found},{' '.join(map(str, report.indices))},"
        f"{report.density.numerator},{report.density.denominator},"
        f"{payload['K'][1] if payload['K'] else ''}\n"
    )
    return {"witness": payload}, {"witness": csv}


def _run_rc_upper(cfg):
    family = load_vector_family(cfg["family"])
    bound = rc_upper(family.space, family, float(cfg["delta"]))
    out = {"d": bound.value, "mesh": bound.mesh, "delta": bound.delta}
    csv = "d,mesh,delta\n" + f"{bound.value!r},{bound.mesh!r},{bound.delta!r}\n"
    return out, {"rc_upper": csv}


def _run_rc_lower(cfg):
    family = load_vector_family(cfg["family"])
    bound = rc_lower(
        family,
        float(cfg["delta"]),
        a=float(cfg.get("a", 1.0)),
        method=cfg.get("method", "auto"),
        mesh=cfg.get("mesh"),
    )
    out = {
        "log_rc_lower_in_units_of_a": bound.value,
        "delta": bound.delta,
        "a": bound.a,
        "lower_constant": _interval_json(bound.constants.lower),
    }
    csv = "value,delta,a,family_size\n" + (
        f"{bound.value!r},{bound.delta!r},{bound.a!r},{bound.family_size}\n"
    )
    return out, {"rc_lower": csv}


def _build_system(cfg_system, space):
    kind = cfg_system.get("kind", "identity")
    if kind == "identity":
        return IdentityIsometry(space)
    if kind == "shift":
        phases = cfg_system.get("phases")
        if phases is not None:
            phases = [complex(p[0], p[1]) if isinstance(p, list) else p for p in phases]
        return CoordinateShiftIsometry(space, int(cfg_system.get("step", 1)), phases)
    raise ConfigError(f"unknown system kind {kind!r}")


def _run_hc_growth(cfg):
    family = load_vector_family(cfg["family"])
    system = _build_system(cfg.get("system", {"kind": "identity"}), family.space)
    seq = hc_growth(
        system,
        family,
        float(cfg["delta"]),
        int(cfg["n_max"]),
        cfg["mode"],
        a=float(cfg.get("a", 1.0)),
        method=cfg.get("method", "auto"),
        mesh=cfg.get("mesh"),
    )
    out = {"mode": seq.mode, "final_slope": seq.final_slope, "provenance": "values in units of a"}
    return out, {"growth": seq.to_csv()}


def _run_subshift(cfg):
    system = load_symbolic_system(cfg["system"])
    est = entropy_estimate(
        system, cfg["n_schedule"], cfg["eps_schedule"], mode=cfg.get("mode", "exact")
    )
    out = {"extrapolated": est.extrapolated, "oracle": est.oracle}
    return out, {"entropy": est.to_csv()}


def _run_spin_check(cfg):
    n_max = cfg.get("n_max", 6)
    draws = cfg.get("draws", 20)
    tensor_n_max = cfg.get("tensor_n_max", 4)
    rng = np.random.default_rng(_SPIN_RNG_SEED)
    lines = ["check,n,draw,value,expected,passed"]
    worst = 0.0
    for n in range(1, n_max + 1):
        for d in range(draws):
            pairs = [tuple(row) for row in rng.normal(size=(n, 2))]
            formula, matrix = pauli_span_norm(pairs, crosscheck=True)
            err = abs(formula - matrix)
            worst = max(worst, err)
            lines.append(f"span-norm,{n},{d},{matrix!r},{formula!r},{err <= 1e-9}")
    for n in range(1, tensor_n_max + 1):
        fam = car_generators(n)
        for d in range(draws):
            c = rng.normal(size=n)
            l2 = car_l2_identity(fam, c)
            lines.append(f"square-sum,{n},{d},{l2.norm_value!r},{l2.expected!r},{l2.passed}")
            t1 = car_tensor_l1_identity(fam, c)
            lines.append(f"tensor-l1,{n},{d},{t1.norm_value!r},{t1.expected!r},{t1.passed}")
            if not (l2.passed and t1.passed):
                raise CalabError("spin identity failed")
    out = {"worst_span_norm_error": worst, "all_passed": True}
    return out, {"spin": "\n".join(lines) + "\n"}


def _run_packing(cfg):
    m = int(cfg["m"])
    delta = float(cfg["delta"])
    if "n_range" in cfg:
        lo, hi = (int(v) for v in cfg["n_range"])
        ns = range(lo, hi + 1)
    elif "n" in cfg:
        ns = [int(cfg["n"])]
    else:
        raise ConfigError("packing needs 'n' or 'n_range'")
    lines = ["m,n,delta,size,hamming_floor,ball_volume,bound_rhs,stirling_rhs,verified"]
    results = []
    for n in ns:
        p = hamming_packing(m, n, delta)
        ok = p.verify()
        if not ok:
            raise CalabError("packing verification failed")
        lines.append(
            f"{p.m},{p.n},{p.delta!r},{p.size},{p.hamming_floor},{p.ball_volume},"
            f"{p.bound_rhs!r},{p.stirling_rhs!r},{ok}"
        )
        results.append({"n": p.n, "size": p.size, "bound": math.ceil(p.bound_rhs)})
    return {"cells": results}, {"packing": "\n".join(lines) + "\n"}


def _run_perm_classify(cfg):
    spec = load_permutation_spec(cfg["spec"])
    linf = classify_linfty(spec)
    ell1 = classify_ell1(spec)
    out = {
        "linfty": {"verdict": linf.verdict, "reason": linf.reason},
        "ell1": {"verdict": ell1.verdict, "reason": ell1.reason},
    }
    if "window" in cfg:
        lo, hi = (int(v) for v in cfg["window"])
        census = orbit_census(spec, (lo, hi))
        out["census"] = {
            "summary": census.summary,
            "cycle_lengths": list(census.cycle_lengths),
            "block_lengths": list(census.block_lengths),
        }
    csv = "space,verdict,reason\n" + (
        f"linfty,{linf.verdict},\"{linf.reason}\"\nell1,{ell1.verdict},\"{ell1.reason}\"\n"
    )
    return out, {"classification": csv}


def _run_shift_experiment(cfg):
    seq = shift_growth_experiment(
        int(cfg["m"]), int(cfg["n_max"]), float(cfg["delta"]), field=cfg.get("field", "complex")
    )
    out = {
        "final_slope": seq.final_slope,
        "dim_floors": [p.extras["dim_floor"] for p in seq.points],
        "description": seq.description,
    }
    return out, {"growth": seq.to_csv()}


def _run_perm_corroborate(cfg):
    spec = load_permutation_spec(cfg["spec"])
    phases = load_phase_spec(cfg.get("phases"))
    lo, hi = (int(v) for v in cfg["window"])
    report = empirical_corroboration(
        spec,
        phases,
        (lo, hi),
        float(cfg["delta"]),
        space_kind=cfg.get("space", "ell1"),
        probe_points=int(cfg.get("probe_points", 2)),
        field=cfg.get("field", "complex"),
        n_max=int(cfg.get("n_max", 12)),
    )
    out = {
        "kind": report.kind,
        "linfty": report.classification_linf.verdict,
        "ell1": report.classification_ell1.verdict,
        "details": report.details,
    }
    tables = {}
    if report.growth is not None:
        out["final_slope"] = report.growth.final_slope
        tables["growth"] = report.growth.to_csv()
    if report.witness is not None:
        out["witness"] = report.witness.to_json()
        out["witness"]["found"] = report.witness.found
    return out, tables


_EXECUTORS = {
    "l1-constant": _run_l1_constant,
    "l1-witness": _run_l1_witness,
    "rc-upper": _run_rc_upper,
    "rc-lower": _run_rc_lower,
    "hc-growth": _run_hc_growth,
    "subshift-entropy": _run_subshift,
    "spin-check": _run_spin_check,
    "packing": _run_packing,
    "perm-classify": _run_perm_classify,
    "shift-experiment": _run_shift_experiment,
    "perm-corroborate": _run_perm_corroborate,
}


# ---------------------------------------------------------------------------
# manifest plumbing
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_config(config: dict, out_dir: str, quiet: bool = False) -> dict:
    kind = config["experiment"]
    start = time.monotonic()
    outputs, tables = _EXECUTORS[kind](config)
    wall = time.monotonic() - start
    os.makedirs(out_dir, exist_ok=True)
    table_files = {}
    for name, csv_text in tables.items():
        fname = f"{name}.csv"
        _atomic_write(os.path.join(out_dir, fname), csv_text)
        table_files[name] = fname
    manifest = {
        "config": config,
        "tool_version": __version__,
        "wall_time_s": wall,
        "outputs": outputs,
        "tables": table_files,
        "provenance": {
            "seed_echoed_unused": config.get("seed", 0),
            "notes": [
                "all lower rank bounds are reported in units of the universal constant a",
            ],
        },
    }
    _atomic_write(
        os.path.join(out_dir, "manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )
    if not quiet:
        print(f"{kind}: wrote manifest.json and {sorted(table_files.values())} to {out_dir}")
    return manifest


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lab", description="contractive-approximation entropy laboratory"
    )
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--threads", type=int, default=1, help="worker hint; execution is deterministic")
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute one experiment config")
    run_p.add_argument("config")
    val_p = sub.add_parser("validate", help="check a config against the schema")
    val_p.add_argument("config")
    sub.add_parser("list", help="catalog of experiment kinds")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        if args.command == "list":
            for kind in sorted(CATALOG):
                print(f"{kind} - {CATALOG[kind]}")
            return 0
        if args.command == "validate":
            validate_config(_load_config(args.config))
            if not args.quiet:
                print("config ok")
            return 0
        config = validate_config(_load_config(args.config))
        out_dir = args.out or config.get("output") or "lab-out"
        run_config(config, out_dir, quiet=args.quiet)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CalabError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
