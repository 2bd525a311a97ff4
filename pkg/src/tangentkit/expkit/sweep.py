"""Width sweep: kernel drift during training, per (family, width, seed) cell.

Each cell trains one shallow ReLU network (all of w, v, b trainable) by
full-batch gradient descent and records the relative kernel change
delta_t = ||K(w_t) - K(w_0)||_F / ||K(w_0)||_F at a fixed iteration
stride. Cells run in a thread pool; results are collected and written in
cell-key order so the output files are deterministic regardless of
completion order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import _accel
from ..activations import get_activation
from ..errors import ContractError
from ..numerics.eigen import symmetric_extremes
from ..systems import Dataset, ShallowNet, TransformedSystem, synthetic_dataset
from . import io

__all__ = ["KernelChangeSeries", "run_drift_cell", "run_sweep", "kernel_form_step"]

# Output map per sweep family; the hidden activation is always relu.
FAMILY_OUTPUT = {
    "linear-output": "identity",
    "tanh-output": "scaled-tanh-3",
    "swish-output": "swish",
}

_STATUS = {0: "converged", 1: "max_iters", 2: "diverged"}


@dataclass(frozen=True)
class KernelChangeSeries:
    """Relative kernel drift over one training run."""

    family: str
    width: int
    seed: int
    t: np.ndarray
    delta: np.ndarray
    loss: np.ndarray
    max_delta: float
    converged: bool
    step: float
    iters: int
    status: str

    def __post_init__(self):
        if self.t.shape != self.delta.shape or self.t.shape != self.loss.shape:
            raise ContractError("series arrays must share a shape")
        if self.t[0] != 0 or self.delta[0] != 0.0:
            raise ContractError("series must start at t=0 with delta exactly 0")
        if self.max_delta != float(np.max(self.delta)):
            raise ContractError("max_delta must equal the series maximum")


def kernel_form_step(lambda_min: float, L2: float, n: int) -> float:
    """Step size from the kernel-spectrum prescription with mu = lambda_min/2.

    L2 is a squared-Lipschitz estimate for the map; for the tiny
    lambda_min typical of ReLU kernels the result is close to 1/L2.
    """
    if L2 <= 0:
        raise ContractError("initial kernel has no positive eigenvalue")
    lam_min = max(lambda_min, 0.0)
    mu = lam_min / 2.0
    rn = math.sqrt(n)
    return 2.0 * rn * L2 / (2.0 * rn * L2 * L2 + (lam_min - mu) * mu)


def _initial_spectrum(width, seed, x, hidden, output):
    """(net, theta, lambda_min of the composed kernel, squared-Lipschitz cap).

    The cap is phi'_max^2 * lambda_max(K_base): the composed kernel at the
    starting point can understate the reachable top eigenvalue when the
    output map starts saturated, and a step sized off that understatement
    oscillates once training re-enters the active region.
    """
    net = ShallowNet(width, hidden, inputs=x, trainable="wvb")
    theta = net.init_params(seed)
    base_min, base_max = symmetric_extremes(net.tangent_gram(theta), seed=seed)
    if output == "identity":
        return net, theta, base_min, base_max
    system = TransformedSystem(net, output)
    lam_min, _ = symmetric_extremes(system.tangent_gram(theta), seed=seed)
    slope = get_activation(output).lipschitz_constant
    return net, theta, lam_min, slope * slope * base_max


def run_drift_cell(
    dataset: Dataset,
    family: str,
    width: int,
    seed: int,
    step: float | str = "auto",
    max_iters: int = 100_000,
    loss_tol: float = 1e-4,
    stride: int | str = "auto",
    hidden_activation: str = "relu",
) -> KernelChangeSeries:
    """Train one sweep cell and return its drift series."""
    if family not in FAMILY_OUTPUT:
        raise ContractError(f"family must be one of {sorted(FAMILY_OUTPUT)}, got {family!r}")
    output = FAMILY_OUTPUT[family]
    x = dataset.scalar_inputs()
    y = dataset.targets

    if stride == "auto":
        # Kernel recomputation is O(n^2 m); thin the snapshots beyond 1e4.
        stride = 1 if width <= 10_000 else 10

    net, theta, lam_min, L2 = _initial_spectrum(width, seed, x, hidden_activation, output)
    if step == "auto":
        step = kernel_form_step(lam_min, L2, dataset.n)
    w, b, v = (np.array(a) for a in net.split(theta))

    _, rec_t, rec_delta, rec_loss, status, iters = _accel.drift_run(
        x,
        y,
        w,
        b,
        v,
        net.activation.code,
        get_activation(output).code,
        float(step),
        max_iters,
        loss_tol,
        stride,
    )
    return KernelChangeSeries(
        family=family,
        width=width,
        seed=seed,
        t=rec_t,
        delta=rec_delta,
        loss=rec_loss,
        max_delta=float(np.max(rec_delta)),
        converged=status == 0,
        step=float(step),
        iters=iters,
        status=_STATUS[status],
    )


def _cell_name(family: str, width: int, seed: int) -> str:
    return f"{family}_m{width}_s{seed}"


def run_sweep(config: dict, out_dir: str | Path, threads: int = 1) -> dict:
    """Run the full drift sweep and persist per-cell series plus a summary.

    Returns the summary record (also written to summary.json).
    """
    out = Path(out_dir)
    families = config["sweep"]["families"]
    widths = config["widths"]
    seeds = config["sweep"]["seeds"]
    dataset = synthetic_dataset(config["dataset"]["n"], seed=config["dataset"]["seed"])
    opt = config["optimizer"]

    cells = [(f, m, s) for f in families for m in widths for s in seeds]

    def work(cell):
        f, m, s = cell
        return run_drift_cell(
            dataset,
            f,
            m,
            s,
            step=opt["step"],
            max_iters=opt["max_iters"],
            loss_tol=opt["loss_tol"],
            stride=opt["kernel_stride"],
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(cells, pool.map(work, cells)))
    else:
        results = {cell: work(cell) for cell in cells}

    # Persist in cell-key order, never completion order.
    per_cell = {}
    for cell in cells:
        series = results[cell]
        name = _cell_name(*cell)
        io.write_csv(
            out / "cells" / f"{name}.csv",
            ("t", "delta", "loss"),
            zip(series.t, series.delta, series.loss),
        )
        per_cell[name] = {
            "family": series.family,
            "width": series.width,
            "seed": series.seed,
            "max_delta": series.max_delta,
            "final_delta": float(series.delta[-1]),
            "final_loss": float(series.loss[-1]),
            "converged": series.converged,
            "status": series.status,
            "step": series.step,
            "iters": series.iters,
        }

    by_width = {}
    flagged = []
    for f in families:
        for m in widths:
            group = [results[(f, m, s)] for s in seeds]
            max_deltas = [g.max_delta for g in group]
            by_width[f"{f}_m{m}"] = {
                "family": f,
                "width": m,
                "mean_max_delta": float(np.mean(max_deltas)),
                "median_max_delta": float(np.median(max_deltas)),
                "converged_runs": int(sum(g.converged for g in group)),
                "total_runs": len(group),
            }
            flagged += [
                _cell_name(f, m, g.seed) for g in group if not g.converged
            ]

    summary = {
        "kind": "kernel-drift-sweep",
        "dataset": config["dataset"],
        "families": list(families),
        "widths": list(widths),
        "seeds": list(seeds),
        "cells": per_cell,
        "aggregates": by_width,
        "non_converged": flagged,
    }
    io.write_json_record(out / "summary.json", summary)

    # Right panel: mean max-drift against width, one block per family.
    io.write_gnuplot_dat(
        out / "fig_drift_vs_width.dat",
        ("width", "mean_max_delta", "median_max_delta"),
        [
            (
                f,
                [
                    (
                        m,
                        by_width[f"{f}_m{m}"]["mean_max_delta"],
                        by_width[f"{f}_m{m}"]["median_max_delta"],
                    )
                    for m in widths
                ],
            )
            for f in families
        ],
    )
    # Left panel: drift against iteration at the largest width, first seed.
    m_big = widths[-1]
    io.write_gnuplot_dat(
        out / "fig_drift_vs_iteration.dat",
        ("t", "delta"),
        [
            (f"{f} m={m_big}", list(zip(results[(f, m_big, seeds[0])].t,
                                        results[(f, m_big, seeds[0])].delta)))
            for f in families
        ],
    )
    return summary
