"""Command-line entry point: fit-predict, simulate, bound, vc-check, sandwich.

Configuration comes from a single JSON file plus repeatable --set KEY=VALUE
overrides with dotted paths (last writer wins); unknown keys are rejected.
Exit codes: 0 success, 1 assertion failure, 2 configuration or IO error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .core import (
    CoverageSpec,
    Dataset,
    PredictionInterval,
    SplitConfig,
    read_dataset_csv,
    read_query_csv,
    split_dataset,
)
from .errors import ConfigError, CoverageLabError, DataError
from .harness import (
    CoverageReport,
    ExperimentConfig,
    MethodConfig,
    describe_descriptor,
    generate_probe_sets,
    run_conditional_experiment,
    run_efficiency_experiment,
    run_marginal_experiment,
    run_sandwich_check,
)
from .marginal import ThinningRule, calib_residuals, marginal_quantile, naive_approx_cc_level, thinned_predict
from .oracle import (
    FeatureLaw,
    LocationFamily,
    MeanFunction,
    NoiseModel,
    hardness_lower_bound,
    optimal_length,
)
from .regressors import fit_regressor, predict_mean
from .restricted import local_width, predict_restricted
from .set_classes import (
    Ball,
    FullSpace,
    GridPartition,
    HalfSpace,
    Interval1D,
    NearestAnchorPartition,
    PartitionCell,
    SetClass,
    vc_estimate,
)

WORKERS_ENV = "COVERAGE_LAB_WORKERS"

# ---------------------------------------------------------------------------
# Config schema validation
# ---------------------------------------------------------------------------

_NUM = (int, float)

_MEAN_SCHEMA = {"kind": str, "coef": list, "intercept": _NUM, "value": _NUM, "amplitude": _NUM, "frequency": _NUM}
_FAMILY_SCHEMA = {
    "mean": _MEAN_SCHEMA,
    "noise": {"kind": str, "scale": _NUM},
    "features": {"kind": str, "dim": int, "low": _NUM, "high": _NUM},
}
_SPLIT_SCHEMA = {"n0": int, "n1": int, "shuffle": bool}
_COVERAGE_SCHEMA = {"alpha": _NUM, "delta": _NUM}
_CLASS_SCHEMA = {"kind": str, "dim": int, "cuts": list, "source": str}
_METHOD_SCHEMA = {"kind": str, "c": _NUM, "class": _CLASS_SCHEMA}
_REGRESSOR_SCHEMA = {"kind": str, "k": int}
_PROBES_SCHEMA = {"source": str, "count": int, "mass_low": _NUM, "mass_high": _NUM, "sets": list}

_COMMAND_SCHEMAS = {
    "simulate": {
        "seed": int,
        "workers": int,
        "trials": int,
        "experiment": str,
        "family": _FAMILY_SCHEMA,
        "split": _SPLIT_SCHEMA,
        "coverage": _COVERAGE_SCHEMA,
        "method": _METHOD_SCHEMA,
        "regressor": _REGRESSOR_SCHEMA,
        "probes": _PROBES_SCHEMA,
        "mass_sample": int,
        "report_csv": str,
        "out": str,
    },
    "bound": {
        "seed": int,
        "workers": int,
        "family": _FAMILY_SCHEMA,
        "coverage": _COVERAGE_SCHEMA,
        "levels": list,
        "out": str,
    },
    "fit-predict": {
        "seed": int,
        "workers": int,
        "data": str,
        "queries": str,
        "split": _SPLIT_SCHEMA,
        "coverage": _COVERAGE_SCHEMA,
        "method": _METHOD_SCHEMA,
        "regressor": _REGRESSOR_SCHEMA,
        "out": str,
    },
    "vc-check": {
        "seed": int,
        "workers": int,
        "class": _CLASS_SCHEMA,
        "max_m": int,
        "sets_per_m": int,
        "out": str,
    },
    "sandwich": {
        "seed": int,
        "workers": int,
        "trials": int,
        "family": _FAMILY_SCHEMA,
        "split": _SPLIT_SCHEMA,
        "coverage": _COVERAGE_SCHEMA,
        "method": _METHOD_SCHEMA,
        "regressor": _REGRESSOR_SCHEMA,
        "vc": int,
        "c_alpha": _NUM,
        "c_delta": _NUM,
        "probe_count": int,
        "mc_trials": int,
        "out": str,
    },
}


def _validate(config, schema, path="") -> None:
    if not isinstance(config, dict):
        raise ConfigError(f"config section {path or '<root>'} must be an object")
    for key, value in config.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key {where!r}")
        expected = schema[key]
        if isinstance(expected, dict):
            _validate(value, expected, where)
        elif expected is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"config key {where!r} must be an integer, got {value!r}")
        elif expected is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"config key {where!r} must be a boolean, got {value!r}")
        elif expected is str:
            if not isinstance(value, str):
                raise ConfigError(f"config key {where!r} must be a string, got {value!r}")
        elif expected is list:
            if not isinstance(value, list):
                raise ConfigError(f"config key {where!r} must be a list, got {value!r}")
        else:
            if isinstance(value, bool) or not isinstance(value, expected):
                raise ConfigError(f"config key {where!r} must be a number, got {value!r}")


def _apply_override(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set path {key!r} traverses a non-object value")
    node[parts[-1]] = value


# ---------------------------------------------------------------------------
# Builders from config sections
# ---------------------------------------------------------------------------


def _build_family(section: dict) -> LocationFamily:
    mean_cfg = section.get("mean", {"kind": "constant", "value": 0.0})
    kind = mean_cfg.get("kind", "constant")
    if kind == "constant":
        mean = MeanFunction(kind="constant", intercept=float(mean_cfg.get("value", 0.0)))
    elif kind == "linear":
        mean = MeanFunction(
            kind="linear",
            coef=tuple(mean_cfg.get("coef", (1.0,))),
            intercept=float(mean_cfg.get("intercept", 0.0)),
        )
    else:
        mean = MeanFunction(
            kind=kind,
            amplitude=float(mean_cfg.get("amplitude", 1.0)),
            frequency=float(mean_cfg.get("frequency", 1.0)),
            intercept=float(mean_cfg.get("intercept", 0.0)),
        )
    noise_cfg = section.get("noise", {"kind": "gaussian", "scale": 1.0})
    noise = NoiseModel(kind=noise_cfg.get("kind", "gaussian"), scale=float(noise_cfg.get("scale", 1.0)))
    feat_cfg = section.get("features", {"kind": "uniform-box", "dim": 1})
    features = FeatureLaw(
        kind=feat_cfg.get("kind", "uniform-box"),
        dim=int(feat_cfg.get("dim", 1)),
        low=float(feat_cfg.get("low", 0.0)),
        high=float(feat_cfg.get("high", 1.0)),
    )
    return LocationFamily(mean=mean, noise=noise, features=features)


def _build_set_class(section: dict, dim: int, data: Dataset | None = None) -> SetClass:
    kind = section.get("kind", "full-space-only")
    if kind == "finite-partition":
        if section.get("source") == "column":
            if data is None or data.labels is None:
                raise ConfigError("partition source 'column' requires a dataset with a cell column")
            return SetClass.finite_partition(NearestAnchorPartition(data.features, data.labels))
        cuts = section.get("cuts")
        if cuts is None:
            raise ConfigError("finite-partition requires 'cuts' (per-dimension cut points) or source 'column'")
        return SetClass.finite_partition(GridPartition(tuple(tuple(axis) for axis in cuts)))
    if kind == "intervals-1d":
        return SetClass.intervals_1d()
    return SetClass(kind, int(section.get("dim", dim)))


def _build_method(section: dict, dim: int, data: Dataset | None = None) -> MethodConfig:
    kind = section.get("kind", "split-marginal")
    set_class = None
    if "class" in section:
        set_class = _build_set_class(section["class"], dim, data)
    return MethodConfig(kind=kind, c=float(section.get("c", 1.0)), set_class=set_class)


def _parse_probe_descriptor(entry: dict, set_class: SetClass | None):
    kind = entry.get("kind")
    if kind == "full-space":
        return FullSpace(int(entry["dim"]))
    if kind == "interval":
        return Interval1D(float(entry["lo"]), float(entry["hi"]))
    if kind == "ball":
        return Ball(tuple(float(v) for v in entry["center"]), float(entry["radius"]))
    if kind == "half-space":
        return HalfSpace(tuple(float(v) for v in entry["normal"]), float(entry["offset"]))
    if kind == "cell":
        if set_class is None or set_class.partition is None:
            raise ConfigError("cell probe requires a partition-backed method class")
        label = entry["label"]
        if isinstance(label, list):
            label = tuple(label)
        return PartitionCell(set_class.partition, label)
    raise ConfigError(f"unknown probe descriptor kind {kind!r}")


def _build_probes(section: dict, method: MethodConfig, family, spec, seed: int):
    source = section.get("source", "cells")
    if source == "explicit":
        return tuple(_parse_probe_descriptor(e, method.set_class) for e in section.get("sets", []))
    if method.set_class is None:
        raise ConfigError(f"probe source {source!r} requires the method to carry a set class")
    if source == "cells":
        if method.set_class.kind not in ("finite-partition", "full-space-only"):
            raise ConfigError("probe source 'cells' requires a partition or full-space class")
        return generate_probe_sets(method.set_class, family, spec, seed=seed)
    if source == "generate":
        return generate_probe_sets(
            method.set_class,
            family,
            spec,
            count=int(section.get("count", 10)),
            seed=seed,
            mass_low=section.get("mass_low"),
            mass_high=section.get("mass_high"),
        )
    raise ConfigError(f"unknown probe source {source!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, float):
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        if math.isnan(obj):
            return "NaN"
    return obj


def _emit(payload, out_path) -> None:
    if isinstance(payload, CoverageReport):
        text = payload.to_json()
    else:
        text = json.dumps(_jsonify(payload), sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(config: dict) -> int:
    family = _build_family(config.get("family", {}))
    split_cfg = config.get("split", {})
    split = SplitConfig(
        n0=int(split_cfg.get("n0", 100)),
        n1=int(split_cfg.get("n1", 100)),
        seed=0,
        shuffle=bool(split_cfg.get("shuffle", True)),
    )
    cov = config.get("coverage", {})
    spec = CoverageSpec(alpha=float(cov.get("alpha", 0.1)), delta=float(cov.get("delta", 1.0)))
    method = _build_method(config.get("method", {}), family.features.dim)
    seed = int(config.get("seed", 0))
    experiment = config.get("experiment", "marginal")
    probes = ()
    if experiment == "conditional":
        probes = _build_probes(config.get("probes", {}), method, family, spec, seed)
    reg = config.get("regressor", {})
    cfg = ExperimentConfig(
        family=family,
        split=split,
        spec=spec,
        method=method,
        regressor=reg.get("kind", "least-squares"),
        knn_k=reg.get("k"),
        trials=int(config.get("trials", 1000)),
        probe_sets=probes,
        seed=seed,
        workers=int(config.get("workers", 1)),
        mass_sample=int(config.get("mass_sample", 100_000)),
    )
    csv_path = config.get("report_csv")
    if experiment == "marginal":
        report = run_marginal_experiment(cfg, csv_path)
    elif experiment == "conditional":
        report = run_conditional_experiment(cfg, csv_path)
    elif experiment == "efficiency":
        report = run_efficiency_experiment(cfg, csv_path)
    else:
        raise ConfigError(f"unknown experiment {experiment!r}; expected marginal|conditional|efficiency")
    _emit(report, config.get("out"))
    return 0 if report.passed in (True, None) else 1


def cmd_bound(config: dict) -> int:
    family = _build_family(config.get("family", {}))
    cov = config.get("coverage", {})
    spec = CoverageSpec(alpha=float(cov.get("alpha", 0.1)), delta=float(cov.get("delta", 1.0)))
    levels = config.get("levels") or [round(0.5 + 0.005 * i, 6) for i in range(100)]
    curve = [{"level": lv, "optimal_length": optimal_length(family, float(lv))} for lv in levels]
    value, argmin_c = hardness_lower_bound(family, spec)
    payload = {
        "alpha": spec.alpha,
        "delta": spec.delta,
        "hardness_lower_bound": value,
        "argmin_c": argmin_c,
        "curve": curve,
        "noise": {"kind": family.noise.kind, "scale": family.noise.scale},
    }
    _emit(payload, config.get("out"))
    return 0


def cmd_fit_predict(config: dict) -> int:
    for key in ("data", "queries"):
        if key not in config:
            raise ConfigError(f"fit-predict requires the {key!r} path")
    data = read_dataset_csv(config["data"])
    queries, _query_labels = read_query_csv(config["queries"])
    if queries.shape[1] != data.dim:
        raise DataError(
            f"query dimension {queries.shape[1]} does not match training dimension {data.dim}"
        )
    split_cfg = config.get("split", {})
    n0 = int(split_cfg.get("n0", data.n // 2))
    n1 = int(split_cfg.get("n1", data.n - data.n // 2))
    split = SplitConfig(n0=n0, n1=n1, seed=int(config.get("seed", 0)), shuffle=bool(split_cfg.get("shuffle", True)))
    cov = config.get("coverage", {})
    spec = CoverageSpec(alpha=float(cov.get("alpha", 0.1)), delta=float(cov.get("delta", 1.0)))
    method = _build_method(config.get("method", {}), data.dim, data)
    reg = config.get("regressor", {})
    train, calib = split_dataset(data, split)
    model = fit_regressor(reg.get("kind", "least-squares"), train, k=reg.get("k"))
    residuals = calib_residuals(model, calib)
    records = []
    if method.kind in ("split-marginal", "naive-alphadelta", "thinned"):
        alpha_run = spec.alpha
        if method.kind == "naive-alphadelta":
            alpha_run = naive_approx_cc_level(spec)
        elif method.kind == "thinned":
            alpha_run = method.c * spec.alpha * spec.delta
        q = marginal_quantile(residuals, alpha_run) if alpha_run > 0 else math.inf
        rule = ThinningRule(method.c, spec.alpha, seed=int(config.get("seed", 0))) if method.kind == "thinned" else None
        for i, x in enumerate(queries):
            iv = PredictionInterval.symmetric(predict_mean(model, x), q)
            if rule is not None:
                iv = thinned_predict(iv, rule, i)
            records.append(
                {"query": i, "x": [float(v) for v in x], "pieces": [list(p) for p in iv.pieces], "width": q}
            )
    elif method.kind == "restricted":
        for i, x in enumerate(queries):
            table = local_width(x, calib, residuals, method.set_class, spec)
            iv = predict_restricted(model, table, x)
            records.append(
                {
                    "query": i,
                    "x": [float(v) for v in x],
                    "pieces": [list(p) for p in iv.pieces],
                    "width": table.width,
                    "witness": describe_descriptor(table.achieving.witness),
                    "witness_calibration_count": len(table.achieving.indices),
                    "eligible_subsets": table.eligible_subsets,
                    "enumeration_exact": table.exact,
                }
            )
    else:
        raise ConfigError(f"fit-predict does not support method {method.kind!r}")
    payload = {
        "alpha": spec.alpha,
        "delta": spec.delta,
        "method": method.kind,
        "n0": n0,
        "n1": n1,
        "predictions": records,
    }
    _emit(payload, config.get("out"))
    return 0


def cmd_vc_check(config: dict) -> int:
    section = config.get("class", {"kind": "l2-balls", "dim": 2})
    set_class = _build_set_class(section, int(section.get("dim", 2)))
    est = vc_estimate(
        set_class,
        max_m=int(config.get("max_m", set_class.dim + 2)),
        sets_per_m=int(config.get("sets_per_m", 200)),
        seed=int(config.get("seed", 0)),
    )
    payload = {
        "class": set_class.kind,
        "dim": set_class.dim,
        "vc_lower": est.vc_lower,
        "shatter_fraction": {str(m): f for m, f in est.shatter_fraction.items()},
    }
    _emit(payload, config.get("out"))
    return 0


def cmd_sandwich(config: dict) -> int:
    family = _build_family(config.get("family", {}))
    split_cfg = config.get("split", {})
    split = SplitConfig(
        n0=int(split_cfg.get("n0", 200)), n1=int(split_cfg.get("n1", 200)), seed=0,
        shuffle=bool(split_cfg.get("shuffle", True)),
    )
    cov = config.get("coverage", {})
    spec = CoverageSpec(alpha=float(cov.get("alpha", 0.1)), delta=float(cov.get("delta", 0.2)))
    method = _build_method(config.get("method", {"kind": "restricted", "class": {"kind": "full-space-only"}}), family.features.dim)
    reg = config.get("regressor", {})
    cfg = ExperimentConfig(
        family=family,
        split=split,
        spec=spec,
        method=method,
        regressor=reg.get("kind", "least-squares"),
        knn_k=reg.get("k"),
        trials=int(config.get("trials", 1)),
        seed=int(config.get("seed", 0)),
        workers=int(config.get("workers", 1)),
    )
    report = run_sandwich_check(
        cfg,
        vc=int(config.get("vc", 1)),
        c_alpha=float(config.get("c_alpha", 1.0)),
        c_delta=float(config.get("c_delta", 1.0)),
        probe_count=int(config.get("probe_count", 20)),
        mc_trials=int(config.get("mc_trials", 20_000)),
    )
    _emit(report, config.get("out"))
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "fit-predict": cmd_fit_predict,
    "vc-check": cmd_vc_check,
    "sandwich": cmd_sandwich,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="coverage-lab",
        description="Distribution-free prediction intervals with conditional-coverage guarantees",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--seed", type=int, help="override the RNG seed")
    parser.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or machine cores)")
    parser.add_argument("--out", help="output JSON path (default: stdout)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-path config override, repeatable; last writer wins")
    args = parser.parse_args(argv)

    try:
        config: dict = {}
        if args.config:
            with open(args.config) as fh:
                config = json.load(fh)
        for assignment in args.set:
            _apply_override(config, assignment)
        if args.seed is not None:
            config["seed"] = args.seed
        if args.out is not None:
            config["out"] = args.out
        if args.workers is not None:
            config["workers"] = args.workers
        elif "workers" not in config:
            env = os.environ.get(WORKERS_ENV)
            config["workers"] = int(env) if env else (os.cpu_count() or 1)
        _validate(config, _COMMAND_SCHEMAS[args.command])
        return _COMMANDS[args.command](config)
    except (CoverageLabError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
