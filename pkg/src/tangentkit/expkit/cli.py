"""Command-line entry point.

Subcommands: sweep, certify, train, probe, linearize, bounds. Exit codes:
0 success, 2 not uniformly conditioned, 3 capacity exceeded, 4 training
diverged, 5 violated precondition or contract (message names the failed
hypothesis on stderr).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..conditioning import certify_ball, tangent_kernel
from ..errors import (
    CapacityError,
    ContractError,
    PreconditionError,
    UnsupportedOperationError,
)
from ..hessian import deep_bounds, nonconvexity_probe, sparse_hessian_bound, width_requirement
from ..linearize import compare_dynamics
from ..optimize import prescribe_gd, run_gd, verify_rate
from ..systems import (
    Dataset,
    DeepMLP,
    LinearSystem,
    QuadraticSystem,
    ShallowNet,
    SparseAdditiveModel,
    TransformedSystem,
    box_dataset,
    synthetic_dataset,
)
from . import io
from .config import load_config
from .sweep import kernel_form_step, run_sweep

EXIT_OK = 0
EXIT_NOT_CONDITIONED = 2
EXIT_CAPACITY = 3
EXIT_DIVERGED = 4
EXIT_PRECONDITION = 5


def _build_dataset(cfg: dict) -> Dataset:
    ds = cfg["dataset"]
    if ds["dim"] == 1:
        data = synthetic_dataset(ds["n"], seed=ds["seed"])
    else:
        data = box_dataset(ds["n"], ds["dim"], seed=ds["seed"])
    k = ds["duplicates"]
    if k:
        inputs = np.array(data.inputs)
        targets = np.array(data.targets)
        inputs[1 : 1 + k] = inputs[0]
        targets[1 : 1 + k] = targets[0]
        data = Dataset(inputs=inputs, targets=targets)
    return data


def build_problem(cfg: dict):
    """Instantiate (system, w0, targets) from a resolved config."""
    family = cfg["family"]
    seed = cfg["seed"]
    data = _build_dataset(cfg)
    n = data.n

    if family == "linear":
        matrix = cfg["matrix"]
        if matrix == "identity":
            system = LinearSystem(np.eye(n))
        elif matrix == "random":
            system = LinearSystem.random(n, cfg["width"], seed=seed)
        else:
            diag = matrix["diag"]
            if len(diag) != n:
                raise ContractError(
                    f"matrix.diag length {len(diag)} must equal dataset.n = {n}"
                )
            system = LinearSystem(np.diag(diag))
    elif family == "quadratic":
        system = QuadraticSystem.random(n, cfg["width"], seed=seed)
    elif family == "shallow":
        system = ShallowNet(
            cfg["width"],
            cfg["activation"],
            inputs=data.scalar_inputs(),
            trainable=cfg["trainable"],
        )
    elif family == "deep":
        system = DeepMLP(cfg["depth"], cfg["width"], cfg["activation"], inputs=data.inputs)
    elif family == "sparse":
        units = cfg["sparse"]["units"]
        system = SparseAdditiveModel.random(
            cfg["width"],
            units if units is not None else cfg["width"],
            cfg["sparse"]["sparsity_bound"],
            cfg["activation"],
            inputs=data.scalar_inputs(),
            seed=seed,
        )
    else:  # unreachable: config validated the family
        raise ContractError(f"unknown family {family!r}")

    if cfg["output_activation"] != "identity" and family in ("shallow", "deep"):
        system = TransformedSystem(system, cfg["output_activation"])
    w0 = system.init_params(seed)
    return system, w0, data.targets


def _auto_step(system, w0, targets, cfg: dict):
    """Prescribed step: the smoothness form when second derivatives exist,
    otherwise the kernel-spectrum form (relu has no curvature constant)."""
    kernel = tangent_kernel(system, w0)
    mu = kernel.lambda_min / 2.0
    act = getattr(system, "activation", None)
    smooth = act is None or act.smooth
    if smooth and mu > 0:
        presc = prescribe_gd(
            system, w0, targets, None, mu, mode="smoothness", seed=cfg["seed"]
        )
        return presc.step_size, presc
    step = kernel_form_step(kernel.lambda_min, kernel.lambda_max, system.n_outputs)
    return step, None


def _check_kind(cfg: dict, expected: str) -> None:
    if cfg["kind"] is not None and cfg["kind"] != expected:
        raise ContractError(f"config kind {cfg['kind']!r} does not match subcommand {expected!r}")


def cmd_sweep(cfg: dict, out: Path, threads: int) -> int:
    _check_kind(cfg, "kernel-drift-sweep")
    summary = run_sweep(cfg, out, threads=threads)
    flagged = summary["non_converged"]
    print(f"sweep: {len(summary['cells'])} cells -> {out}")
    if flagged:
        print(f"sweep: {len(flagged)} cells did not converge: {', '.join(flagged)}")
    return EXIT_OK


def cmd_certify(cfg: dict, out: Path, threads: int) -> int:
    _check_kind(cfg, "certify")
    system, w0, targets = build_problem(cfg)
    cert = certify_ball(
        system,
        w0,
        cfg["ball"]["radius"],
        targets,
        samples=cfg["ball"]["samples"],
        seed=cfg["seed"],
    )
    io.write_json_record(out / "certificate.json", cert.to_record())
    ok = cert.uniformly_conditioned
    print(
        f"certify: mu_hat={cert.mu_hat:.6g} kappa_hat="
        f"{'n/a' if cert.kappa_hat is None else f'{cert.kappa_hat:.6g}'} "
        f"-> {'uniformly conditioned' if ok else 'NOT uniformly conditioned'}"
    )
    return EXIT_OK if ok else EXIT_NOT_CONDITIONED


def cmd_train(cfg: dict, out: Path, threads: int) -> int:
    _check_kind(cfg, "train")
    system, w0, targets = build_problem(cfg)
    opt = cfg["optimizer"]
    if opt["step"] == "auto":
        step, presc = _auto_step(system, w0, targets, cfg)
        provenance = presc.provenance if presc is not None else "kernel"
    else:
        step, presc = float(opt["step"]), None
        provenance = "user"

    stride = opt["kernel_stride"]
    if stride == "auto":
        stride = max(1, opt["max_iters"] // 100)
    trajectory = run_gd(
        system,
        w0,
        targets,
        step,
        opt["max_iters"],
        loss_tol=opt["loss_tol"],
        kernel_every=stride,
    )
    io.trajectory_to_csv(out / "trajectory.csv", trajectory)

    try:
        mu_hat = trajectory.min_lambda_min()
    except ContractError:
        mu_hat = presc.mu if presc is not None else float("nan")
    report = {
        "step": step,
        "provenance": provenance,
        "mu_hat": mu_hat,
        "stop_reason": trajectory.stop_reason,
        "converged": trajectory.converged,
        "final_loss": trajectory.final_loss,
        "iterations": int(trajectory.t[-1]),
    }
    if presc is not None:
        report["prescribed_radius"] = presc.radius
        report["max_dist_from_init"] = float(np.max(trajectory.dist_from_init))
    if trajectory.stop_reason != "diverged" and 0 < step * mu_hat < 1:
        rate = verify_rate(trajectory, step, mu_hat)
        report["rate_holds"] = rate.holds
        report["first_violation"] = rate.first_violation
    io.write_json_record(out / "rate_report.json", report)
    print(
        f"train: {trajectory.stop_reason} at t={trajectory.t[-1]} "
        f"loss={trajectory.final_loss:.6g} (step {provenance})"
    )
    if trajectory.stop_reason == "diverged":
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_probe(cfg: dict, out: Path, threads: int) -> int:
    _check_kind(cfg, "probe")
    system, w0, targets = build_problem(cfg)
    opt = cfg["optimizer"]
    if opt["step"] == "auto":
        step, _ = _auto_step(system, w0, targets, cfg)
    else:
        step = float(opt["step"])
    # The probe needs an interpolating point; train down to probe.train_tol.
    trajectory = run_gd(
        system, w0, targets, step, opt["max_iters"], loss_tol=cfg["probe"]["train_tol"]
    )
    result = nonconvexity_probe(
        system,
        trajectory.final_w,
        targets,
        cfg["probe"]["radii"],
        directions_per_radius=cfg["probe"]["directions"],
        seed=cfg["seed"],
    )
    record = {
        "found_negative": result.found_negative,
        "witness_delta": result.witness_delta,
        "curvature": result.curvature,
        "probe_radii": list(result.probe_radii),
        "train_loss": trajectory.final_loss,
    }
    if result.witness_direction is not None:
        record["witness_direction"] = result.witness_direction
    io.write_json_record(out / "probe_report.json", record)
    print(
        "probe: negative curvature "
        + (f"found at delta={result.witness_delta:.3g}" if result.found_negative else "not found")
    )
    return EXIT_OK


def cmd_linearize(cfg: dict, out: Path, threads: int) -> int:
    _check_kind(cfg, "linearize-compare")
    system, w0, targets = build_problem(cfg)
    opt = cfg["optimizer"]
    if opt["step"] == "auto":
        step, _ = _auto_step(system, w0, targets, cfg)
    else:
        step = float(opt["step"])
    report = compare_dynamics(
        system,
        w0,
        targets,
        step,
        cfg["linearize"]["iters"],
        epsilon=cfg["linearize"]["epsilon"],
        seed=cfg["seed"],
    )
    io.gap_series_to_csv(out / "gap_series.csv", report)
    io.write_json_record(
        out / "linearize_report.json",
        {
            "sup_gap": report.sup_gap,
            "hessian_sup": report.hessian_sup,
            "condition_threshold": report.condition_threshold,
            "condition_satisfied": report.condition_satisfied,
            "epsilon": report.epsilon,
            "mu": report.mu,
            "radius": report.radius,
            "L_F": report.L_F,
            "step": step,
            "iterations": cfg["linearize"]["iters"],
        },
    )
    print(
        f"linearize: sup_gap={report.sup_gap:.6g} "
        f"condition_satisfied={report.condition_satisfied}"
    )
    return EXIT_OK


def cmd_bounds(cfg: dict, out: Path, threads: int) -> int:
    _check_kind(cfg, "bounds")
    b = cfg["bounds"]
    if b["kind"] == "deep":
        bounds = deep_bounds(
            b["depth"],
            b["width"],
            b["radius"],
            L_sigma=b["L_sigma"],
            beta_sigma=b["beta_sigma"],
            c0=b["c0"],
            C_x=b["C_x"],
            s0=b["s0"],
        )
        record = {
            "kind": "deep",
            "depth": b["depth"],
            "width": b["width"],
            "radius": b["radius"],
            "hessian_scale": bounds.hessian_scale,
            "lipschitz": bounds.lipschitz,
            "output_bound_prefactor": bounds.output_bound_prefactor,
            "init_output_bound": bounds.init_output_bound(b["delta"]),
            "delta": b["delta"],
        }
        headline = f"hessian_scale={bounds.hessian_scale:.6g} lipschitz={bounds.lipschitz:.6g}"
    elif b["kind"] == "sparse":
        value = sparse_hessian_bound(b["C_s"], b["beta_alpha"], b["s_P"])
        record = {
            "kind": "sparse",
            "C_s": b["C_s"],
            "beta_alpha": b["beta_alpha"],
            "s_P": b["s_P"],
            "hessian_bound": value,
        }
        headline = f"hessian_bound={value:.6g}"
    else:
        value = width_requirement(b["n"], b["mu"], b["lambda_min"], b["depth"])
        record = {
            "kind": "width",
            "n": b["n"],
            "mu": b["mu"],
            "lambda_min": b["lambda_min"],
            "depth": b["depth"],
            "width_requirement": value,
        }
        headline = f"width_requirement={value:.6g}"
    io.write_json_record(out / "bounds_report.json", record)
    print(f"bounds[{b['kind']}]: {headline}")
    return EXIT_OK


_COMMANDS = {
    "sweep": cmd_sweep,
    "certify": cmd_certify,
    "train": cmd_train,
    "probe": cmd_probe,
    "linearize": cmd_linearize,
    "bounds": cmd_bounds,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tangentkit",
        description="Tangent-kernel conditioning experiments",
    )
    parser.add_argument("--config", required=True, help="path to a JSON config file")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument(
        "--seed-override", type=int, default=None, help="replace the config model seed"
    )
    parser.add_argument("command", choices=sorted(_COMMANDS), help="subcommand to run")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed_override is not None:
            cfg["seed"] = args.seed_override
        out = Path(args.out if args.out is not None else cfg["output"]["dir"])
        out.mkdir(parents=True, exist_ok=True)
        io.write_json_record(out / "resolved_config.json", cfg)
        return _COMMANDS[args.command](cfg, out, max(1, args.threads))
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (PreconditionError, UnsupportedOperationError, ContractError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
