"""`mpl` command line front end.

Reads a JSON config, dispatches to one library operation, and writes a JSON
report plus a flat CSV (and figures where a trace exists). Exit codes:
0 success, 2 config/validation error, 3 numeric non-convergence. Errors
print a single machine-parsable line on stderr.
"""

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .continuous import (
    MarginalSpec,
    catalog_potential,
    continuous_duality_check,
    continuous_mutual_pressure,
    expression_potential,
    quadrature_pressure,
)
from .dual import (
    SinkhornNonConvergence,
    duality_report,
    equilibrium_check,
    i_sym,
    mutual_pressure_limit,
    verify_legendre,
)
from .measures import JointPmf, Pmf, marginals, mutual_information, shannon_entropy
from .microstates import (
    DEFAULT_ENUM_BUDGET,
    EnumerationBudgetExceeded,
    finite_n_value,
    mc_value,
)
from .pressure import PotentialTensor, gibbs_measure, pressure
from .report import ReportRecord
from .sanov import ldp_rate, lemma31_check

SUBCOMMANDS = (
    "entropy",
    "pressure",
    "gibbs",
    "mutual-pressure",
    "duality",
    "legendre",
    "equilibrium",
    "sanov",
    "continuous",
)


class ConfigError(ValueError):
    pass


_number_array = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_nested_array = {"type": "array", "minItems": 1}

_POTENTIAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["tensor", "match", "zero", "catalog", "expr"]},
        "values": _nested_array,
        "beta": {"type": "number"},
        "name": {"type": "string"},
        "params": {"type": "object"},
        "expr": {"type": "string"},
        "bound": {"type": "number"},
    },
    "required": ["kind"],
}

_MARGINAL_SCHEMA = {
    "oneOf": [
        _number_array,
        {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["uniform", "density", "atomic"]},
                "grid_points": {"type": "integer", "minimum": 3},
                "points": _number_array,
                "values": _number_array,
                "masses": _number_array,
            },
            "required": ["kind"],
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "instance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["discrete", "continuous", "sanov"]},
                "alphabet_size": {"type": "integer", "minimum": 1},
                "coordinates": {"type": "integer", "minimum": 1},
                "marginals": {"type": "array", "items": _MARGINAL_SCHEMA},
                "joint": _nested_array,
                "potential": _POTENTIAL_SCHEMA,
                "R": {"type": "number", "exclusiveMinimum": 0},
                "n": {"type": "integer", "minimum": 1},
                "task": {"enum": ["pressure", "mutual-pressure", "duality"]},
                "mu0": _number_array,
                "mu1": _number_array,
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "N_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            },
            "required": ["kind"],
        },
        "method": {"enum": ["exact-N", "mc", "limit", "all"]},
        "N": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "budget": {"type": "integer", "minimum": 1},
        "quadrature_order": {"type": "integer", "minimum": 2},
        "levels": {"type": "integer", "minimum": 2},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "figures": {"type": "boolean"},
            },
        },
    },
    "required": ["instance"],
}


def load_config(path) -> dict:
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"config rejected by schema: {e.message}") from e
    return cfg


def _build_potential_tensor(inst) -> PotentialTensor:
    spec = inst.get("potential")
    if spec is None:
        raise ConfigError("instance needs a 'potential'")
    kind = spec["kind"]
    if kind == "tensor":
        if "values" not in spec:
            raise ConfigError("tensor potential needs 'values'")
        return PotentialTensor.from_values(np.asarray(spec["values"], dtype=float))
    d = inst.get("alphabet_size")
    n = inst.get("coordinates")
    if kind == "match":
        if d is None or n is None:
            raise ConfigError("match potential needs alphabet_size and coordinates")
        return PotentialTensor.match_indicator(d, n, float(spec.get("beta", 1.0)))
    if kind == "zero":
        if d is None or n is None:
            raise ConfigError("zero potential needs alphabet_size and coordinates")
        return PotentialTensor.zeros(d, n)
    raise ConfigError(f"potential kind {kind!r} is not valid for a discrete instance")


def _build_marginals(inst, shape) -> list:
    specs = inst.get("marginals")
    if specs is None:
        raise ConfigError("instance needs 'marginals'")
    if len(specs) != len(shape):
        raise ConfigError("number of marginals must match the potential arity")
    out = []
    for w, d in zip(specs, shape):
        if not isinstance(w, list):
            raise ConfigError("discrete marginals must be plain weight arrays")
        if len(w) != d:
            raise ConfigError("marginal length must match the alphabet size")
        out.append(Pmf.from_weights(np.asarray(w, dtype=float)))
    return out


def _build_joint(inst) -> JointPmf:
    if "joint" not in inst:
        raise ConfigError("instance needs a 'joint' probability tensor")
    return JointPmf.from_weights(np.asarray(inst["joint"], dtype=float))


def _build_continuous(inst):
    R = float(inst.get("R", 1.0))
    n = int(inst.get("n", 1))
    spec = inst.get("potential")
    if spec is None:
        raise ConfigError("continuous instance needs a 'potential'")
    if spec["kind"] == "catalog":
        h = catalog_potential(spec.get("name", "zero"), R, n, **spec.get("params", {}))
    elif spec["kind"] == "expr":
        if "expr" not in spec or "bound" not in spec:
            raise ConfigError("expr potential needs 'expr' and 'bound'")
        h = expression_potential(spec["expr"], R, n, float(spec["bound"]))
    else:
        raise ConfigError(f"potential kind {spec['kind']!r} is not valid here")
    margins = []
    for m in inst.get("marginals", []):
        if not isinstance(m, dict):
            raise ConfigError("continuous marginals must be objects")
        if m["kind"] == "uniform":
            margins.append(MarginalSpec.uniform(R, int(m.get("grid_points", 513))))
        elif m["kind"] == "density":
            margins.append(MarginalSpec("density", m["points"], m["values"]))
        elif m["kind"] == "atomic":
            margins.append(MarginalSpec.atomic(m["points"], m["masses"]))
    return h, margins


def _knob(cfg, args, key, default):
    if getattr(args, key.replace("-", "_"), None) is not None:
        return getattr(args, key.replace("-", "_"))
    return cfg.get(key, default)


def _run_entropy(cfg, args, rec):
    mu = _build_joint(cfg["instance"])
    scale = math.log(2) if args.bits else 1.0
    unit = "bits" if args.bits else "nats"
    s = shannon_entropy(mu) / scale
    mi = mutual_information(mu) / scale
    margs = marginals(mu)
    rec.results = {
        "units": unit,
        "joint_entropy": s,
        "marginal_entropies": [shannon_entropy(m) / scale for m in margs],
        "mutual_information": mi,
    }
    rec.add_row("joint_entropy", s)
    for i, m in enumerate(margs):
        rec.add_row(f"marginal_entropy[{i}]", shannon_entropy(m) / scale)
    rec.add_row("mutual_information", mi)


def _run_pressure(cfg, args, rec):
    h = _build_potential_tensor(cfg["instance"])
    p = pressure(h)
    rec.results = {"pressure": p}
    rec.add_row("pressure", p)


def _run_gibbs(cfg, args, rec):
    h = _build_potential_tensor(cfg["instance"])
    g = gibbs_measure(h)
    rec.results = {
        "pressure": pressure(h),
        "gibbs": g.weights.tolist(),
        "gibbs_marginals": [m.weights.tolist() for m in marginals(g)],
    }
    rec.add_row("pressure", pressure(h))
    for idx in np.ndindex(*g.weights.shape):
        rec.add_row("gibbs[" + ",".join(map(str, idx)) + "]", g.weights[idx])


def _run_mutual_pressure(cfg, args, rec):
    inst = cfg["instance"]
    h = _build_potential_tensor(inst)
    mus = _build_marginals(inst, h.values.shape)
    method = _knob(cfg, args, "method", "limit")
    N = cfg.get("N", 8)
    samples = cfg.get("samples", 10**4)
    seed = rec.seed
    tol = _knob(cfg, args, "tol", 1e-10)
    budget = cfg.get("budget", DEFAULT_ENUM_BUDGET)
    methods = {}

    def run_exact():
        try:
            v = finite_n_value(h, mus, N, budget=budget)
            return {"value": v, "N": N}
        except EnumerationBudgetExceeded:
            est = mc_value(h, mus, N, samples, seed)
            return {
                "value": est.value,
                "N": N,
                "stderr": est.stderr,
                "note": "enumeration budget exceeded; fell back to Monte Carlo",
            }

    if method in ("exact-N", "all"):
        methods["exact-N"] = run_exact()
    if method in ("mc", "all"):
        est = mc_value(h, mus, N, samples, seed)
        methods["mc"] = {"value": est.value, "stderr": est.stderr, "N": N,
                         "samples": samples}
    if method in ("limit", "all"):
        est = mutual_pressure_limit(h, mus, tol=tol)
        methods["limit"] = {
            "value": est.value,
            "iterations": est.iterations,
            "residual": est.residual,
        }
    rec.results = {"methods": methods}
    if method == "all":
        agreement = {}
        if "exact-N" in methods and "limit" in methods:
            agreement["exact_minus_limit"] = (
                methods["exact-N"]["value"] - methods["limit"]["value"]
            )
        if "mc" in methods and "exact-N" in methods:
            diff = methods["mc"]["value"] - methods["exact-N"]["value"]
            agreement["mc_minus_exact"] = diff
            se = methods["mc"]["stderr"]
            agreement["mc_z_score"] = diff / se if se else 0.0
        rec.results["agreement"] = agreement
    for name, m in methods.items():
        rec.add_row(
            "mutual_pressure", m["value"], m.get("stderr"), name, m.get("N")
        )


def _run_duality(cfg, args, rec):
    inst = cfg["instance"]
    h = _build_potential_tensor(inst)
    mus = _build_marginals(inst, h.values.shape)
    tol = _knob(cfg, args, "tol", 1e-12)
    rep = duality_report(h, mus, tol=tol)
    rec.results = {
        "pressure": rep.pressure,
        "mutual_pressure": rep.mutual_pressure,
        "entropy_sum": rep.entropy_sum,
        "gap": rep.gap,
        "marginal_distances": list(rep.marginal_distances),
    }
    rec.add_row("pressure", rep.pressure)
    rec.add_row("mutual_pressure", rep.mutual_pressure, method="limit")
    rec.add_row("entropy_sum", rep.entropy_sum)
    rec.add_row("gap", rep.gap)


def _run_legendre(cfg, args, rec):
    mu = _build_joint(cfg["instance"])
    trials = cfg.get("trials", 3)
    best = verify_legendre(mu, trials=trials, seed=rec.seed)
    target = i_sym(mu)
    rec.results = {
        "legendre_supremum": best,
        "i_sym": target,
        "shortfall": target - best,
    }
    rec.add_row("legendre_supremum", best)
    rec.add_row("i_sym", target)


def _run_equilibrium(cfg, args, rec):
    inst = cfg["instance"]
    h = _build_potential_tensor(inst)
    mu = _build_joint(inst)
    tol = _knob(cfg, args, "tol", 1e-8)
    ok, rep = equilibrium_check(h, mu, tol=tol)
    rec.results = {"equilibrium": ok, **{k: (list(v) if isinstance(v, tuple) else v) for k, v in rep.items()}}
    rec.add_row("equilibrium", 1.0 if ok else 0.0)
    rec.add_row("equality_gap", rep["equality_gap"])


def _run_sanov(cfg, args, rec):
    inst = cfg["instance"]
    for key in ("mu0", "mu1", "delta", "N_list"):
        if key not in inst:
            raise ConfigError(f"sanov instance needs {key!r}")
    mu0 = Pmf.from_weights(np.asarray(inst["mu0"], dtype=float))
    mu1 = Pmf.from_weights(np.asarray(inst["mu1"], dtype=float))
    out = lemma31_check(mu0, mu1, float(inst["delta"]), inst["N_list"])
    rec.results = dict(out)
    for N, v in zip(out["N"], out["log_prob_rate"]):
        rec.add_row("typical_set_log_prob", v, method="type-sum", N=N)
    rec.add_row("ldp_rate", out["ldp_rate"])


def _run_continuous(cfg, args, rec):
    inst = cfg["instance"]
    h, margins = _build_continuous(inst)
    task = inst.get("task", "pressure")
    order = cfg.get("quadrature_order", 16)
    levels = cfg.get("levels", 16)
    if task == "pressure":
        p = quadrature_pressure(h, order)
        p2 = quadrature_pressure(h, 2 * order)
        rec.results = {"pressure": p2, "richardson_estimate": abs(p2 - p)}
        rec.add_row("pressure", p2)
    elif task == "mutual-pressure":
        if len(margins) != h.n:
            raise ConfigError("need one marginal per coordinate")
        tol = _knob(cfg, args, "tol", 1e-12)
        est = continuous_mutual_pressure(h, margins, levels, tol=tol)
        rec.results = {
            "mutual_pressure": est.value,
            "trace": [list(t) for t in est.trace],
            "error_proxy": est.residual,
        }
        for lv, v in est.trace:
            rec.add_row("mutual_pressure", v, method="limit", N=lv)
    else:  # duality
        rep = continuous_duality_check(h, order, levels)
        rec.results = {
            "pressure": rep.pressure,
            "mutual_pressure": rep.mutual_pressure,
            "entropy_sum": rep.entropy_sum,
            "gap": rep.gap,
        }
        rec.add_row("pressure", rep.pressure)
        rec.add_row("mutual_pressure", rep.mutual_pressure, method="limit")
        rec.add_row("entropy_sum", rep.entropy_sum)
        rec.add_row("gap", rep.gap)


_HANDLERS = {
    "entropy": _run_entropy,
    "pressure": _run_pressure,
    "gibbs": _run_gibbs,
    "mutual-pressure": _run_mutual_pressure,
    "duality": _run_duality,
    "legendre": _run_legendre,
    "equilibrium": _run_equilibrium,
    "sanov": _run_sanov,
    "continuous": _run_continuous,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpl",
        description="pressure, entropy, and mutual-pressure computations",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="path to JSON config")
        sp.add_argument("--method", choices=["exact-N", "mc", "limit", "all"])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--quiet", action="store_true")
        sp.add_argument("--bits", action="store_true",
                        help="display entropies in bits instead of nats")
        sp.add_argument("--no-figures", action="store_true")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("MPL_THREADS")
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        rec = ReportRecord(
            subcommand=args.subcommand,
            config=cfg,
            seed=seed,
            artifact_version=__version__,
        )
        t0 = time.perf_counter()
        try:
            _HANDLERS[args.subcommand](cfg, args, rec)
        except ConfigError:
            raise
        except (ValueError, IndexError) as e:
            raise ConfigError(str(e)) from e
        rec.wall_clock_seconds = time.perf_counter() - t0
        if threads is not None:
            rec.results["threads_cap"] = int(threads)
    except ConfigError as e:
        print(f"mpl-error: config-invalid: {e}", file=sys.stderr)
        return 2
    except SinkhornNonConvergence as e:
        print(f"mpl-error: non-convergence: {e}", file=sys.stderr)
        return 3
    except EnumerationBudgetExceeded as e:
        print(f"mpl-error: non-convergence: {e}", file=sys.stderr)
        return 3

    outdir = Path(args.out) if args.out else Path(cfg.get("output", {}).get("dir", "."))
    jpath, cpath = rec.write(outdir)
    figures = cfg.get("output", {}).get("figures", True) and not args.no_figures
    if figures:
        from .figures import render_figures

        render_figures(rec, outdir)
    if not args.quiet:
        for quantity, value, stderr, method, N in rec.rows:
            extra = f" ± {stderr:.3g}" if stderr else ""
            tag = f" [{method}]" if method else ""
            print(f"{quantity} = {value:.12g}{extra}{tag}")
        print(f"report written to {jpath}")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
