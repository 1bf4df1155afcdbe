"""Experiment config files: TOML with flat dotted keys.

Example::

    task.name = "aloha"
    run.seeds = [0, 1, 2]
    run.methods = ["genbo", "mutation"]
    genbo.loss = "rPL"
    genbo.utility = "sEI"

Keys under ``variants.<label>.`` override the ``genbo.*`` / ``train.*`` keys
for one extra GenBO method named ``<label>``; when any variant is present the
bare ``genbo`` method expands to the variants.
"""

from __future__ import annotations

import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from genbo.engine import ExperimentConfig, Method, MethodConfig, PriorMode, TaskConfig
from genbo.errors import ConfigError
from genbo.losses import LossSpec
from genbo.trainer import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SEED_OFFSET_ENV = "GENBO_SEED_OFFSET"

TASK_KEYS = {
    "name": str, "vocab": str, "target": str, "min_edit_distance": int,
    "length": int, "motifs": int, "motif_length": int, "quantization": int,
}
RUN_KEYS = {
    "rounds": int, "batch_size": int, "init_size": int, "seeds": list, "n_seeds": int,
    "noise_sigma": float, "methods": list,
}
THRESHOLD_KEYS = {"p_start": float, "p_end": float}
GENBO_KEYS = {
    "loss": str, "utility": str, "temperature": float, "p_flip": float, "logits": bool,
    "prior": str, "regularizer": str, "reg0": float, "sei_sharpness": float,
    "cbas_last_batch_only": bool, "label": str,
}
TRAIN_KEYS = {
    "learning_rate": float, "epochs": int, "grad_clip_norm": float, "warm_start": bool,
    "adam_beta1": float, "adam_beta2": float, "adam_eps": float,
}
MUTATION_KEYS = {"n_mutations": int, "label": str}
SECTIONS = {
    "task": TASK_KEYS, "run": RUN_KEYS, "threshold": THRESHOLD_KEYS,
    "genbo": GENBO_KEYS, "train": TRAIN_KEYS, "mutation": MUTATION_KEYS,
}

TASK_DEFAULTS = {
    "aloha": {"rounds": 10, "batch_size": 8, "init_size": 64},
    "ehrlich": {"rounds": 32, "batch_size": 128, "init_size": 128},
}


@dataclass
class RunPlan:
    """Everything ``genbo run`` needs: one ExperimentConfig per method, plus seeds."""

    experiments: list[ExperimentConfig]
    seeds: list[int]
    source: dict


def _locate(text: str, dotted: str) -> int | None:
    """1-based line where ``dotted`` (or its last component) is assigned."""
    lines = text.splitlines()
    for pattern in (re.escape(dotted), re.escape(dotted.rsplit(".", 1)[-1])):
        rx = re.compile(rf"^\s*(\"?){pattern}\1\s*=")
        for i, line in enumerate(lines, start=1):
            if rx.search(line):
                return i
    return None


def _guess_key(message: str, fallback: str) -> str:
    aliases = {"T must": "run.rounds", "B must": "run.batch_size", "p_start": "threshold.p_start"}
    for frag, key in aliases.items():
        if frag in message:
            return key
    for sec, keys in SECTIONS.items():
        for k in keys:
            if re.search(rf"\b{k}\b", message):
                return f"{sec}.{k}"
    return fallback


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(value, typ, key):
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is bool and not isinstance(value, bool):
        raise TypeError(f"{key} must be true or false")
    if typ is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise TypeError(f"{key} must be an integer")
    if not isinstance(value, typ):
        raise TypeError(f"{key} must be of type {typ.__name__}")
    return value


def _method_config(g: dict, tr: dict, label: str = "") -> MethodConfig:
    train = TrainConfig(
        **{k: v for k, v in tr.items()},
        lambda0=g.get("reg0", 1.0),
        regularizer=g.get("regularizer", "quadratic"),
    )
    loss = LossSpec(
        kind=g.get("loss", "rPL"),
        temperature=g.get("temperature", 1.0),
        p_flip=g.get("p_flip", 0.1),
        use_importance_weights=g.get("logits", False),
    )
    return MethodConfig(
        Method.GENBO,
        loss=loss,
        utility=g.get("utility", "sEI"),
        sei_sharpness=g.get("sei_sharpness", 1.0),
        prior=PriorMode(g.get("prior", "noprior")),
        cbas_last_batch_only=g.get("cbas_last_batch_only", False),
        train=train,
        label=label or g.get("label", ""),
    )


def parse_config(text: str, path: str = "<config>") -> RunPlan:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", int(m.group(1)) if m else None, path) from None

    flat = _flatten(raw)
    sections: dict[str, dict] = {name: {} for name in SECTIONS}
    variants: dict[str, dict] = {}
    for key, value in flat.items():
        head, _, rest = key.partition(".")
        try:
            if head == "variants":
                label, _, sub = rest.partition(".")
                sub_head, _, sub_key = sub.partition(".")
                if sub_head == "train" and sub_key in TRAIN_KEYS:
                    typ, bucket = TRAIN_KEYS[sub_key], variants.setdefault(label, {}).setdefault("train", {})
                    bucket[sub_key] = _coerce(value, typ, key)
                elif sub in GENBO_KEYS and label:
                    variants.setdefault(label, {}).setdefault("genbo", {})[sub] = _coerce(value, GENBO_KEYS[sub], key)
                else:
                    raise KeyError(key)
            elif head in SECTIONS and rest in SECTIONS[head]:
                sections[head][rest] = _coerce(value, SECTIONS[head][rest], key)
            else:
                raise KeyError(key)
        except KeyError:
            raise ConfigError(f"unknown key {key!r}", _locate(text, key), path) from None
        except TypeError as exc:
            raise ConfigError(str(exc), _locate(text, key), path) from None

    def fail(msg, key=None):
        raise ConfigError(msg, _locate(text, key) if key else None, path)

    task_kw = dict(sections["task"])
    name = task_kw.get("name", "aloha")
    if name not in TASK_DEFAULTS:
        fail(f"task.name must be 'aloha' or 'ehrlich', got {name!r}", "task.name")
    base_task = TaskConfig() if name == "aloha" else TaskConfig.ehrlich()
    try:
        task = TaskConfig(**{**base_task.__dict__, **task_kw})
    except (TypeError, ValueError) as exc:
        fail(str(exc), "task.name")

    run = sections["run"]
    defaults = TASK_DEFAULTS[name]
    if "seeds" in run and "n_seeds" in run:
        fail("give run.seeds or run.n_seeds, not both", "run.n_seeds")
    seeds = run.get("seeds", list(range(run.get("n_seeds", 1))))
    if not seeds or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds):
        fail("run.seeds must be a nonempty list of nonnegative integers", "run.seeds")
    offset = os.environ.get(SEED_OFFSET_ENV, "0")
    try:
        offset = int(offset)
    except ValueError:
        raise ConfigError(f"{SEED_OFFSET_ENV} must be an integer, got {offset!r}", None, path) from None
    seeds = [s + offset for s in seeds]

    methods = run.get("methods", ["genbo", "mutation"])
    if not methods or any(m not in ("genbo", "mutation") for m in methods):
        fail("run.methods entries must be 'genbo' or 'mutation'", "run.methods")

    method_cfgs: list[MethodConfig] = []
    try:
        for m in methods:
            if m == "mutation":
                mut = sections["mutation"]
                method_cfgs.append(MethodConfig(Method.MUTATION, n_mutations=mut.get("n_mutations", 3),
                                                label=mut.get("label", "")))
            elif variants:
                for label, v in variants.items():
                    g = {**sections["genbo"], **v.get("genbo", {})}
                    g.pop("label", None)
                    method_cfgs.append(_method_config(g, {**sections["train"], **v.get("train", {})}, label))
            else:
                method_cfgs.append(_method_config(sections["genbo"], sections["train"]))
    except ValueError as exc:
        fail(str(exc), _guess_key(str(exc), "genbo.loss"))

    labels = [mc.label for mc in method_cfgs]
    if len(set(labels)) != len(labels):
        fail(f"duplicate method labels {labels}; set genbo.label or use variants", "run.methods")

    thr = sections["threshold"]
    experiments = []
    try:
        for mc in method_cfgs:
            experiments.append(ExperimentConfig(
                task=task,
                method=mc,
                T=run.get("rounds", defaults["rounds"]),
                B=run.get("batch_size", defaults["batch_size"]),
                init_size=run.get("init_size", defaults["init_size"]),
                seeds=tuple(seeds),
                noise_sigma=run.get("noise_sigma", 0.0),
                p_start=thr.get("p_start", 0.5),
                p_end=thr.get("p_end", 0.99),
            ))
            experiments[-1].schedule  # validates p_start / p_end
    except ValueError as exc:
        fail(str(exc), _guess_key(str(exc), "run.rounds"))
    return RunPlan(experiments, seeds, raw)


def load_config(path) -> RunPlan:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))
