"""Experiment configuration: one JSON document, strictly validated.

Unknown keys anywhere in the document are validation errors (typos must
not silently change an experiment), and validation reports every
violation at once rather than stopping at the first. The environment
variable SPECOPT_SEED_OFFSET (integer, default 0) is added to every seed
named in the config, so CI shards can vary runs without editing files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .coopt_loss import JointLossConfig
from .param_graph import ParameterGraph, from_edge_list, layer_chain_graph, load_graph, similarity_graph
from .spectral_engine import FilterSpec
from .spectral_optimizer import OptimizerConfig

SEED_OFFSET_ENV = "SPECOPT_SEED_OFFSET"

VARIANTS = ("task_only", "spec_only", "joint", "joint_filtered")
SWEEP_AXES = ("sample_fraction", "lambda", "filter_param")

_TOP_KEYS = {
    "graph", "task", "optimizer", "variants", "seeds", "threshold",
    "init_scale", "sweep", "denoise", "dump_datasets", "out",
}
_GRAPH_KEYS = {
    "edge_list": {"kind", "n", "edges"},
    "layer_chain": {"kind", "group_sizes", "intra_w", "inter_w"},
    "similarity": {"kind", "vectors", "k", "sigma"},
    "file": {"kind", "path"},
}
_TASK_KEYS = {
    "node_regression": {"kind", "dim", "cutoff", "coeff_scale", "signal_seed",
                        "noise_sd", "m", "sample_fraction"},
    "tiny_net": {"kind", "widths", "n_examples", "sample_fraction"},
}
_OPTIMIZER_KEYS = {"eta", "max_steps", "lambda", "filter", "filter_target", "stop_loss"}
_FILTER_KEYS = {"variant", "k", "t"}
_SWEEP_KEYS = {"axis", "values"}
_DENOISE_KEYS = {"dim", "cutoff", "coeff_scale", "filter", "noise_sds"}


class ConfigError(ValueError):
    """Carries the full list of validation violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations))


def seed_offset() -> int:
    raw = os.environ.get(SEED_OFFSET_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError([f"{SEED_OFFSET_ENV} must be an integer, got {raw!r}"]) from None


@dataclass
class ExperimentConfig:
    """Validated experiment description; seeds already carry the env offset."""

    graph: dict
    task: dict
    optimizer: dict
    variants: list
    seeds: list
    threshold: float | None = None
    init_scale: float = 1.0
    sweep: dict | None = None
    denoise: dict | None = None
    dump_datasets: bool = False
    out: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def build_graph(self) -> ParameterGraph:
        spec = self.graph
        kind = spec["kind"]
        if kind == "edge_list":
            return from_edge_list(spec["n"], [tuple(e) for e in spec["edges"]])
        if kind == "layer_chain":
            return layer_chain_graph(spec["group_sizes"], spec["intra_w"], spec["inter_w"])
        if kind == "similarity":
            return similarity_graph(np.asarray(spec["vectors"], dtype=float), spec["k"], spec["sigma"])
        return load_graph(spec["path"])

    def optimizer_config(self, lam: float, filter_spec: FilterSpec, seed: int) -> OptimizerConfig:
        opt = self.optimizer
        return OptimizerConfig(
            eta=opt["eta"],
            max_steps=opt["max_steps"],
            reg=JointLossConfig(lam),
            filter=filter_spec,
            filter_target=opt.get("filter_target", "task_gradient"),
            stop_loss=opt.get("stop_loss"),
            seed=seed,
        )


def parse_filter(doc, where: str, errors: list) -> FilterSpec | None:
    if not isinstance(doc, dict):
        errors.append(f"{where}: filter must be an object")
        return None
    unknown = set(doc) - _FILTER_KEYS
    if unknown:
        errors.append(f"{where}: unknown filter keys {sorted(unknown)}")
        return None
    try:
        return FilterSpec(doc.get("variant", ""), k=doc.get("k"), t=doc.get("t"))
    except ValueError as exc:
        errors.append(f"{where}: {exc}")
        return None


def _check_number(doc, key, where, errors, required=True, minimum=None, strict=False, integer=False):
    if key not in doc:
        if required:
            errors.append(f"{where}: missing required key {key!r}")
        return None
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}: {key} must be a number, got {value!r}")
        return None
    if integer and not isinstance(value, int):
        errors.append(f"{where}: {key} must be an integer, got {value!r}")
        return None
    if minimum is not None:
        if strict and not value > minimum:
            errors.append(f"{where}: {key} must be > {minimum}, got {value}")
            return None
        if not strict and not value >= minimum:
            errors.append(f"{where}: {key} must be >= {minimum}, got {value}")
            return None
    return value


def _validate_graph(doc, errors):
    if not isinstance(doc, dict):
        errors.append("graph: must be an object")
        return
    kind = doc.get("kind")
    if kind not in _GRAPH_KEYS:
        errors.append(f"graph: kind must be one of {sorted(_GRAPH_KEYS)}, got {kind!r}")
        return
    unknown = set(doc) - _GRAPH_KEYS[kind]
    if unknown:
        errors.append(f"graph: unknown keys {sorted(unknown)} for kind {kind}")
    if kind == "edge_list":
        _check_number(doc, "n", "graph", errors, minimum=1, integer=True)
        if not isinstance(doc.get("edges"), list):
            errors.append("graph: edges must be a list of [i, j, w] triples")
    elif kind == "layer_chain":
        sizes = doc.get("group_sizes")
        if not (isinstance(sizes, list) and sizes and all(isinstance(s, int) and s >= 1 for s in sizes)):
            errors.append("graph: group_sizes must be a non-empty list of positive integers")
        _check_number(doc, "intra_w", "graph", errors, minimum=0)
        _check_number(doc, "inter_w", "graph", errors, minimum=0)
    elif kind == "similarity":
        if not isinstance(doc.get("vectors"), list):
            errors.append("graph: vectors must be a list of rows")
        _check_number(doc, "k", "graph", errors, minimum=1, integer=True)
        _check_number(doc, "sigma", "graph", errors, minimum=0, strict=True)
    elif kind == "file":
        if not isinstance(doc.get("path"), str):
            errors.append("graph: path must be a string")


def _validate_task(doc, errors, offset):
    if not isinstance(doc, dict):
        errors.append("task: must be an object")
        return
    kind = doc.get("kind")
    if kind not in _TASK_KEYS:
        errors.append(f"task: kind must be one of {sorted(_TASK_KEYS)}, got {kind!r}")
        return
    unknown = set(doc) - _TASK_KEYS[kind]
    if unknown:
        errors.append(f"task: unknown keys {sorted(unknown)} for kind {kind}")
    fraction = doc.setdefault("sample_fraction", 1.0)
    if isinstance(fraction, (int, float)) and not isinstance(fraction, bool):
        if not (0 < fraction <= 1):
            errors.append(f"task: sample_fraction must be in (0, 1], got {fraction}")
    else:
        errors.append(f"task: sample_fraction must be a number, got {fraction!r}")
    if kind == "node_regression":
        _check_number(doc, "dim", "task", errors, minimum=1, integer=True)
        _check_number(doc, "cutoff", "task", errors, minimum=1, integer=True)
        doc.setdefault("coeff_scale", 1.0)
        _check_number(doc, "coeff_scale", "task", errors, minimum=0, strict=True)
        doc.setdefault("signal_seed", 0)
        sig = _check_number(doc, "signal_seed", "task", errors, integer=True, required=False)
        if sig is not None:
            doc["signal_seed"] = sig + offset
        _check_number(doc, "noise_sd", "task", errors, minimum=0)
        _check_number(doc, "m", "task", errors, minimum=1, integer=True)
    else:
        widths = doc.get("widths")
        if not (isinstance(widths, list) and len(widths) == 3
                and all(isinstance(w, int) and w >= 1 for w in widths)):
            errors.append("task: widths must be [in, hidden, out] positive integers")
        doc.setdefault("n_examples", 64)
        _check_number(doc, "n_examples", "task", errors, minimum=2, integer=True)


def _validate_optimizer(doc, errors):
    if not isinstance(doc, dict):
        errors.append("optimizer: must be an object")
        return
    unknown = set(doc) - _OPTIMIZER_KEYS
    if unknown:
        errors.append(f"optimizer: unknown keys {sorted(unknown)}")
    _check_number(doc, "eta", "optimizer", errors, minimum=0, strict=True)
    _check_number(doc, "max_steps", "optimizer", errors, minimum=1, integer=True)
    doc.setdefault("lambda", 0.0)
    _check_number(doc, "lambda", "optimizer", errors, minimum=0)
    if "filter" in doc:
        parse_filter(doc["filter"], "optimizer", errors)
    else:
        doc["filter"] = {"variant": "identity"}
    target = doc.setdefault("filter_target", "task_gradient")
    if target not in ("task_gradient", "total_gradient"):
        errors.append(f"optimizer: filter_target must be task_gradient or total_gradient, got {target!r}")
    if doc.setdefault("stop_loss", None) is not None:
        _check_number(doc, "stop_loss", "optimizer", errors, required=False)


def _validate_sweep(doc, errors):
    if not isinstance(doc, dict):
        errors.append("sweep: must be an object")
        return
    unknown = set(doc) - _SWEEP_KEYS
    if unknown:
        errors.append(f"sweep: unknown keys {sorted(unknown)}")
    axis = doc.get("axis")
    if axis not in SWEEP_AXES:
        errors.append(f"sweep: axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = doc.get("values")
    if not (isinstance(values, list) and len(values) >= 1):
        errors.append("sweep: values must be a non-empty list")
    elif not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        errors.append("sweep: values must all be numbers")
    elif axis == "sample_fraction" and not all(0 < v <= 1 for v in values):
        errors.append("sweep: sample_fraction values must lie in (0, 1]")
    elif axis == "lambda" and not all(v >= 0 for v in values):
        errors.append("sweep: lambda values must be >= 0")


def _validate_denoise(doc, errors):
    if not isinstance(doc, dict):
        errors.append("denoise: must be an object")
        return
    unknown = set(doc) - _DENOISE_KEYS
    if unknown:
        errors.append(f"denoise: unknown keys {sorted(unknown)}")
    _check_number(doc, "dim", "denoise", errors, minimum=1, integer=True)
    _check_number(doc, "cutoff", "denoise", errors, minimum=1, integer=True)
    doc.setdefault("coeff_scale", 1.0)
    _check_number(doc, "coeff_scale", "denoise", errors, minimum=0, strict=True)
    if "filter" in doc:
        parse_filter(doc["filter"], "denoise", errors)
    else:
        errors.append("denoise: missing required key 'filter'")
    sds = doc.get("noise_sds")
    if not (isinstance(sds, list) and sds
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0 for v in sds)):
        errors.append("denoise: noise_sds must be a non-empty list of nonnegative numbers")


def load_config(path, need=("train",)) -> ExperimentConfig:
    """Parse and validate a config file for the given command's needs.

    `need` may contain "train" (graph/task/optimizer/variants/seeds),
    "sweep", or "denoise" (graph/denoise/seeds). Raises ConfigError with
    every violation collected.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(["top level: config must be a JSON object"])
    offset = seed_offset()
    errors: list = []

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        errors.append(f"top level: unknown keys {sorted(unknown)}")

    needs_train = "train" in need or "sweep" in need
    if "graph" in doc:
        _validate_graph(doc["graph"], errors)
    else:
        errors.append("top level: missing required key 'graph'")

    if needs_train:
        if "task" in doc:
            _validate_task(doc["task"], errors, offset)
        else:
            errors.append("top level: missing required key 'task'")
        if "optimizer" in doc:
            _validate_optimizer(doc["optimizer"], errors)
        else:
            errors.append("top level: missing required key 'optimizer'")
        variants = doc.get("variants")
        if not (isinstance(variants, list) and len(variants) >= 1):
            errors.append("top level: variants must be a non-empty list")
        else:
            bad = [v for v in variants if v not in VARIANTS]
            if bad:
                errors.append(f"variants: unknown names {bad}; expected subset of {list(VARIANTS)}")

    seeds = doc.get("seeds")
    if not (isinstance(seeds, list) and len(seeds) >= 1 and all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)):
        errors.append("top level: seeds must be a non-empty list of integers")
        seeds = []

    threshold = doc.get("threshold")
    if threshold is not None:
        _check_number(doc, "threshold", "top level", errors, required=False)
    doc.setdefault("init_scale", 1.0)
    _check_number(doc, "init_scale", "top level", errors, minimum=0, required=False)
    if not isinstance(doc.setdefault("dump_datasets", False), bool):
        errors.append("top level: dump_datasets must be a boolean")
    if doc.get("out") is not None and not isinstance(doc["out"], str):
        errors.append("top level: out must be a string path")

    if "sweep" in need:
        if "sweep" in doc:
            _validate_sweep(doc["sweep"], errors)
        else:
            errors.append("top level: missing required key 'sweep' for the sweep command")
        if doc.get("threshold") is None:
            errors.append("top level: sweep requires a numeric 'threshold' for steps_to_threshold")
    if "denoise" in need:
        if "denoise" in doc:
            _validate_denoise(doc["denoise"], errors)
        else:
            errors.append("top level: missing required key 'denoise' for the denoise command")

    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        graph=doc["graph"],
        task=doc.get("task", {}),
        optimizer=doc.get("optimizer", {}),
        variants=list(doc.get("variants", [])),
        seeds=[s + offset for s in seeds],
        threshold=doc.get("threshold"),
        init_scale=float(doc["init_scale"]),
        sweep=doc.get("sweep"),
        denoise=doc.get("denoise"),
        dump_datasets=bool(doc["dump_datasets"]),
        out=doc.get("out"),
        raw=doc,
    )


def cross_validate(cfg: ExperimentConfig, graph: ParameterGraph, need=("train",)) -> None:
    """Consistency checks that require the built graph (still config errors)."""
    errors: list = []
    n = graph.n_nodes
    needs_train = "train" in need or "sweep" in need
    if needs_train:
        task = cfg.task
        if task.get("kind") == "tiny_net" and task["widths"][1] != n:
            errors.append(f"task: hidden width {task['widths'][1]} does not match graph node count {n}")
        if task.get("kind") == "node_regression" and task["cutoff"] > n:
            errors.append(f"task: cutoff {task['cutoff']} exceeds graph node count {n}")
        filt = cfg.optimizer.get("filter", {})
        if filt.get("variant") == "ideal_lowpass" and filt.get("k", 0) > n:
            errors.append(f"optimizer: ideal_lowpass k={filt.get('k')} exceeds graph node count {n}")
    if "sweep" in need:
        axis = cfg.sweep["axis"]
        if axis == "filter_param":
            variant = cfg.optimizer.get("filter", {}).get("variant")
            if variant == "identity":
                errors.append("sweep: filter_param axis requires a parameterized optimizer filter")
            elif variant == "ideal_lowpass":
                bad = [v for v in cfg.sweep["values"] if not (1 <= round(v) <= n)]
                if bad:
                    errors.append(f"sweep: ideal_lowpass keep-counts {bad} outside [1, {n}]")
            else:
                bad = [v for v in cfg.sweep["values"] if v < 0]
                if bad:
                    errors.append(f"sweep: filter times {bad} must be >= 0")
    if "denoise" in need:
        doc = cfg.denoise
        if doc["cutoff"] > n:
            errors.append(f"denoise: cutoff {doc['cutoff']} exceeds graph node count {n}")
        filt = doc.get("filter", {})
        if filt.get("variant") == "ideal_lowpass" and filt.get("k", 0) > n:
            errors.append(f"denoise: ideal_lowpass k={filt.get('k')} exceeds graph node count {n}")
    if errors:
        raise ConfigError(errors)
