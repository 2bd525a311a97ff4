"""Experiment configuration: strict JSON with documented keys.

Unknown keys are errors, not warnings, at every nesting level; defaults
are filled in at parse time so the resolved record persisted next to the
results never has silently-missing fields.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..activations import ACTIVATION_KINDS
from ..errors import ContractError

__all__ = ["resolve_config", "load_config", "EXPERIMENT_KINDS", "SWEEP_FAMILIES"]

EXPERIMENT_KINDS = (
    "kernel-drift-sweep",
    "certify",
    "train",
    "probe",
    "linearize-compare",
    "bounds",
)
SWEEP_FAMILIES = ("linear-output", "tanh-output", "swish-output")
MODEL_FAMILIES = ("linear", "quadratic", "shallow", "deep", "sparse")

# "3tanh" is accepted as shorthand for the scaled tanh output map.
_OUTPUT_ALIASES = {"3tanh": "scaled-tanh-3"}


def _unknown(path: str, keys, allowed) -> None:
    extra = sorted(set(keys) - set(allowed))
    if extra:
        raise ContractError(
            f"unknown config key(s) {extra} under {path!r}; allowed: {sorted(allowed)}"
        )


def _section(raw: dict, name: str, defaults: dict) -> dict:
    sub = raw.get(name, {})
    if not isinstance(sub, dict):
        raise ContractError(f"config section {name!r} must be an object")
    _unknown(name, sub.keys(), defaults.keys())
    out = dict(defaults)
    out.update(sub)
    return out


def resolve_config(raw: dict) -> dict:
    """Validate a raw config dict and return it with all defaults filled."""
    if not isinstance(raw, dict):
        raise ContractError("config root must be an object")
    top_allowed = {
        "kind",
        "family",
        "width",
        "widths",
        "depth",
        "activation",
        "output_activation",
        "trainable",
        "matrix",
        "seed",
        "dataset",
        "optimizer",
        "sweep",
        "sparse",
        "ball",
        "probe",
        "linearize",
        "bounds",
        "output",
    }
    _unknown("<root>", raw.keys(), top_allowed)

    cfg: dict = {}
    cfg["kind"] = raw.get("kind")
    if cfg["kind"] is not None and cfg["kind"] not in EXPERIMENT_KINDS:
        raise ContractError(
            f"kind must be one of {EXPERIMENT_KINDS}, got {cfg['kind']!r}"
        )
    cfg["family"] = raw.get("family", "shallow")
    if cfg["family"] not in MODEL_FAMILIES:
        raise ContractError(
            f"family must be one of {MODEL_FAMILIES}, got {cfg['family']!r}"
        )
    cfg["width"] = int(raw.get("width", 100))
    widths = raw.get("widths", [30, 100, 1000, 10000])
    if not (
        isinstance(widths, list)
        and widths
        and all(isinstance(w, int) and w > 0 for w in widths)
        and all(a < b for a, b in zip(widths, widths[1:]))
    ):
        raise ContractError("widths must be a strictly increasing list of positive ints")
    cfg["widths"] = widths
    cfg["depth"] = int(raw.get("depth", 3))

    act = raw.get("activation", "tanh")
    if act not in ACTIVATION_KINDS:
        raise ContractError(f"activation must be one of {ACTIVATION_KINDS}, got {act!r}")
    cfg["activation"] = act
    out_act = raw.get("output_activation", "identity")
    out_act = _OUTPUT_ALIASES.get(out_act, out_act)
    if out_act not in ACTIVATION_KINDS:
        raise ContractError(
            f"output_activation must be one of {ACTIVATION_KINDS} (or '3tanh'), "
            f"got {out_act!r}"
        )
    cfg["output_activation"] = out_act

    trainable = raw.get("trainable", "wvb")
    if trainable not in ("w", "wvb"):
        raise ContractError(f"trainable must be 'w' or 'wvb', got {trainable!r}")
    cfg["trainable"] = trainable

    matrix = raw.get("matrix", "random")
    if isinstance(matrix, dict):
        _unknown("matrix", matrix.keys(), {"diag"})
        diag = matrix.get("diag")
        if not (isinstance(diag, list) and diag):
            raise ContractError("matrix.diag must be a nonempty list of numbers")
        matrix = {"diag": [float(v) for v in diag]}
    elif matrix not in ("identity", "random"):
        raise ContractError(
            "matrix must be 'identity', 'random', or {'diag': [...]}, "
            f"got {matrix!r}"
        )
    cfg["matrix"] = matrix

    cfg["seed"] = int(raw.get("seed", 0))

    cfg["dataset"] = _section(raw, "dataset", {"n": 20, "seed": 0, "dim": 1, "duplicates": 0})
    cfg["dataset"] = {
        "n": int(cfg["dataset"]["n"]),
        "seed": int(cfg["dataset"]["seed"]),
        "dim": int(cfg["dataset"]["dim"]),
        "duplicates": int(cfg["dataset"]["duplicates"]),
    }
    if cfg["dataset"]["n"] < 1 or cfg["dataset"]["dim"] < 1:
        raise ContractError("dataset.n and dataset.dim must be positive")
    if not 0 <= cfg["dataset"]["duplicates"] < cfg["dataset"]["n"]:
        raise ContractError("dataset.duplicates must lie in [0, n)")

    cfg["optimizer"] = _section(
        raw,
        "optimizer",
        {
            "step": "auto",
            "max_iters": 100_000,
            "loss_tol": 1e-4,
            "kernel_stride": "auto",
            "batch_size": None,
            "seed": 0,
        },
    )
    opt = cfg["optimizer"]
    if opt["step"] != "auto":
        opt["step"] = float(opt["step"])
        if opt["step"] <= 0:
            raise ContractError("optimizer.step must be positive or 'auto'")
    opt["max_iters"] = int(opt["max_iters"])
    opt["loss_tol"] = float(opt["loss_tol"])
    if opt["kernel_stride"] != "auto":
        opt["kernel_stride"] = int(opt["kernel_stride"])
        if opt["kernel_stride"] < 1:
            raise ContractError("optimizer.kernel_stride must be >= 1 or 'auto'")

    cfg["sweep"] = _section(
        raw, "sweep", {"seeds": 10, "families": list(SWEEP_FAMILIES)}
    )
    seeds = cfg["sweep"]["seeds"]
    if isinstance(seeds, int):
        if seeds < 1:
            raise ContractError("sweep.seeds must be >= 1")
        cfg["sweep"]["seeds"] = list(range(seeds))
    elif isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds):
        cfg["sweep"]["seeds"] = seeds
    else:
        raise ContractError("sweep.seeds must be a count or a list of ints")
    for fam in cfg["sweep"]["families"]:
        if fam not in SWEEP_FAMILIES:
            raise ContractError(
                f"sweep.families entries must be among {SWEEP_FAMILIES}, got {fam!r}"
            )

    cfg["sparse"] = _section(raw, "sparse", {"units": None, "sparsity_bound": 3})
    if cfg["sparse"]["units"] is not None:
        cfg["sparse"]["units"] = int(cfg["sparse"]["units"])
    cfg["sparse"]["sparsity_bound"] = int(cfg["sparse"]["sparsity_bound"])

    cfg["ball"] = _section(raw, "ball", {"radius": 1.0, "samples": 64})
    cfg["ball"]["radius"] = float(cfg["ball"]["radius"])
    cfg["ball"]["samples"] = int(cfg["ball"]["samples"])

    cfg["probe"] = _section(
        raw, "probe", {"radii": [0.1, 0.01, 0.001], "directions": 32, "train_tol": 1e-9}
    )
    cfg["probe"]["radii"] = [float(r) for r in cfg["probe"]["radii"]]
    cfg["probe"]["directions"] = int(cfg["probe"]["directions"])
    cfg["probe"]["train_tol"] = float(cfg["probe"]["train_tol"])

    cfg["linearize"] = _section(raw, "linearize", {"iters": 200, "epsilon": 0.1})
    cfg["linearize"]["iters"] = int(cfg["linearize"]["iters"])
    cfg["linearize"]["epsilon"] = float(cfg["linearize"]["epsilon"])

    cfg["bounds"] = _section(
        raw,
        "bounds",
        {
            "kind": "deep",
            "depth": 3,
            "width": 512,
            "radius": 1.0,
            "L_sigma": 1.0,
            "beta_sigma": 0.7698003589195010,
            "c0": 3.0,
            "C_x": 1.0,
            "s0": 1.0,
            "delta": 0.1,
            "C_s": 2.0,
            "beta_alpha": 1.0,
            "s_P": 10.0,
            "n": 20,
            "mu": 0.5,
            "lambda_min": 1.0,
        },
    )
    if cfg["bounds"]["kind"] not in ("deep", "sparse", "width"):
        raise ContractError("bounds.kind must be deep|sparse|width")

    cfg["output"] = _section(raw, "output", {"dir": "results"})
    return cfg


def load_config(path: str | Path) -> dict:
    """Read a config file and resolve all defaults."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContractError(f"config {path} is not valid JSON: {exc}") from exc
    return resolve_config(raw)
