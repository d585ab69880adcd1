"""Run orchestration and bit-stable artifact emission.

One manifest in, one output directory out: timeseries.csv (every monitored
quantity per sample, fixed column order), snapshot_<k>.csv for the first and
final samples, and summary.json with the machine-readable verdict block.
Floats are serialized as shortest round-trip decimals and files are written
atomically (temp then rename), so identical manifests reproduce identical
bytes.

Exit codes: 0 run completed and every diagnostic passed, 1 numerical or
diagnostic failure, 2 curvature blow-up, 3 invalid input.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import diagnostics, flow, geometry, markers
from .errors import (
    CurveFlowError,
    InsufficientDataError,
    ManifestError,
    NotConvergedError,
)
from .manifest import RunManifest, load_manifest

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BLOWUP = 2
EXIT_INVALID = 3

#: Fuzzing tolerances (relative): inequality slacks may be this far below
#: zero before counting as violations; quadrature noise sits orders below.
LIN_TSAI_RTOL = 1e-8
HOELDER_RTOL = 1e-8
ISOPERIMETRIC_RTOL = 1e-9


def format_float(x: float) -> str:
    """Shortest decimal that round-trips to the same float64."""
    return repr(float(x))


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def timeseries_text(records: Sequence[diagnostics.DiagnosticsRecord]) -> str:
    lines = [",".join(diagnostics.TIMESERIES_COLUMNS)]
    for rec in records:
        lines.append(",".join(format_float(v) for v in rec.row()))
    return "\n".join(lines) + "\n"


def snapshot_text(state: flow.FlowState) -> str:
    curve = geometry.reconstruct_curve(state.profile())
    lines = ["theta,rho,nu,x,y"]
    for theta, rho, nu, (x, y) in zip(
        state.grid.nodes, state.rho, state.nu, curve.points
    ):
        lines.append(
            ",".join(format_float(v) for v in (theta, rho, nu, x, y))
        )
    return "\n".join(lines) + "\n"


def _clean(value):
    """Non-finite -> None so summary.json stays standard JSON (an infinite
    check margin means the check was vacuous for the run)."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _fit_block(fit: diagnostics.DecayFit | None, error: str | None, passed: bool | None) -> dict:
    if fit is None:
        return {"error": error}
    return {
        "window": [fit.window[0], fit.window[1]],
        "measured_rate": _clean(fit.measured_rate),
        "theoretical_rate": _clean(fit.theoretical_rate),
        "r_squared": _clean(fit.r_squared),
        "sample_count": fit.sample_count,
        "vacuous": fit.vacuous,
        "passed": passed,
    }


@dataclass
class ExecutionResult:
    exit_code: int
    status: str
    summary: dict
    output_dir: str | None
    run: flow.FlowRun | None = None
    records: list[diagnostics.DiagnosticsRecord] | None = None


def execute_manifest(
    manifest: RunManifest,
    output_dir: str | None = None,
    write_outputs: bool = True,
) -> ExecutionResult:
    """Run the flow described by a manifest, evaluate every diagnostic,
    and (optionally) write the artifact files."""
    out_dir = output_dir or manifest.output_dir
    try:
        config = manifest.to_flow_config()
        profile = manifest.build_profile()
    except (CurveFlowError, ValueError) as exc:
        summary = {
            "format_version": manifest.format_version,
            "status": "invalid_input",
            "exit_code": EXIT_INVALID,
            "error": str(exc),
            "config": manifest.model_dump(),
        }
        if write_outputs and out_dir:
            atomic_write_text(Path(out_dir) / "summary.json", _dump_json(summary))
        return ExecutionResult(EXIT_INVALID, "invalid_input", summary, out_dir)

    result = flow.run(config, profile)
    records = diagnostics.records_for_run(result)
    checks = diagnostics.evaluate_run(result, records)

    decay_fit = decay_passed = None
    decay_err = None
    try:
        decay_fit = diagnostics.fit_decay(records, config.n)
        decay_passed = diagnostics.decay_fit_passes(decay_fit)
    except InsufficientDataError as exc:
        decay_err = str(exc)

    grad_fit = grad_passed = None
    grad_err = None
    try:
        grad_fit = diagnostics.grad_energy_decay(records)
        grad_passed = grad_fit.vacuous or (
            grad_fit.measured_rate > 0.0 and grad_fit.tail_monotone
        )
    except InsufficientDataError as exc:
        grad_err = str(exc)

    circle_block = None
    try:
        radius, center = diagnostics.limit_circle(result)
        circle_block = {"radius": radius, "center": [float(center[0]), float(center[1])]}
    except NotConvergedError:
        pass

    checks_passed = all(c.passed for c in checks) and decay_passed is not False
    if result.status is flow.StepStatus.BLOWUP:
        exit_code = EXIT_BLOWUP
    elif result.status is flow.StepStatus.NUMERICAL_FAILURE:
        exit_code = EXIT_FAILURE
    elif not checks_passed:
        exit_code = EXIT_FAILURE
    else:
        exit_code = EXIT_OK

    final = records[-1]
    summary = {
        "format_version": manifest.format_version,
        "status": result.status.value,
        "exit_code": exit_code,
        "steps": result.steps,
        "final": {
            "t": final.t,
            "L": final.L,
            "A": final.A,
            "lambda": final.lam,
            "Q": final.Q,
            "iso_ratio": final.iso_ratio,
            "kappa_min": final.kappa_min,
            "kappa_max": final.kappa_max,
            "e_inf": final.e_inf,
        },
        "limit_circle": circle_block,
        "decay": _fit_block(decay_fit, decay_err, decay_passed),
        "grad_energy_decay": _fit_block(grad_fit, grad_err, grad_passed),
        "checks": {c.name: {"passed": c.passed, "margin": _clean(c.margin)} for c in checks},
        "checks_passed": checks_passed,
        "config": manifest.model_dump(),
    }

    if write_outputs and out_dir:
        try:
            directory = Path(out_dir)
            atomic_write_text(directory / "timeseries.csv", timeseries_text(records))
            atomic_write_text(directory / "snapshot_0.csv", snapshot_text(result.samples[0]))
            last = len(result.samples) - 1
            if last > 0:
                atomic_write_text(directory / f"snapshot_{last}.csv", snapshot_text(result.final))
            atomic_write_text(directory / "summary.json", _dump_json(summary))
        except OSError as exc:
            summary = dict(summary, exit_code=EXIT_INVALID,
                           error=f"output_dir not writable: {exc}")
            return ExecutionResult(EXIT_INVALID, result.status.value, summary, out_dir, result, records)

    return ExecutionResult(exit_code, result.status.value, summary, out_dir, result, records)


def _dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _sweep_worker(manifest_path: str, out_dir: str) -> tuple[str, int]:
    manifest = load_manifest(manifest_path)
    result = execute_manifest(manifest, output_dir=out_dir)
    return manifest_path, result.exit_code


def sweep(config_dir: str | Path, output_root: str | Path | None = None, jobs: int | None = None) -> list[tuple[str, int]]:
    """Run every *.json manifest in a directory through a process pool.

    Each run writes to <output_root>/<manifest stem>/ (output_root defaults
    to the config directory), so runs never share files.
    """
    config_dir = Path(config_dir)
    paths = sorted(config_dir.glob("*.json"))
    if not paths:
        raise ManifestError(f"no *.json manifests in {config_dir}")
    root = Path(output_root) if output_root else config_dir
    tasks = [(str(p), str(root / p.stem)) for p in paths]
    workers = jobs or min(len(tasks), os.cpu_count() or 1)
    results: list[tuple[str, int]] = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_sweep_worker, p, o) for p, o in tasks]
        for fut in futures:
            results.append(fut.result())
    return results


def fuzz_inequalities(
    count: int,
    seed: int,
    n_values: Sequence[float],
    grid_size: int = 256,
    replay: Iterable[dict[str, float]] | None = None,
) -> dict:
    """Check Lin-Tsai, Hoelder and the isoperimetric inequality on random
    convex profiles (or replayed `fourier` parameter sets).

    Deterministic given the seed.  Violations carry the offending profile's
    fourier parameters for replay.
    """
    if count < 1 and replay is None:
        raise ValueError("count must be >= 1")
    for n in n_values:
        if n < 1.0:
            raise ValueError(f"inequality exponents require n >= 1, got {n}")
    grid = geometry.build_grid(grid_size)
    violations: list[dict] = []
    invalid_inputs: list[dict] = []
    worst = {"lin_tsai": math.inf, "hoelder": math.inf, "isoperimetric": math.inf}
    checked = 0

    def check_one(profile: geometry.RadiusProfile, params: dict[str, float], index: int) -> None:
        nonlocal checked
        checked += 1
        summary = geometry.summarize(profile)
        L, A = summary.length, summary.area
        iso_slack = summary.iso_difference
        worst["isoperimetric"] = min(worst["isoperimetric"], iso_slack)
        if iso_slack < -ISOPERIMETRIC_RTOL * L * L:
            violations.append(
                {"index": index, "check": "isoperimetric", "slack": iso_slack, "profile": params}
            )
        for n in n_values:
            lt = diagnostics.check_lin_tsai(profile, n, L, A)
            worst["lin_tsai"] = min(worst["lin_tsai"], lt)
            if lt < -LIN_TSAI_RTOL * geometry.moment(profile, n):
                violations.append(
                    {"index": index, "check": "lin_tsai", "n": n, "slack": lt, "profile": params}
                )
            ho = diagnostics.check_hoelder(profile, n)
            worst["hoelder"] = min(worst["hoelder"], ho)
            if ho < -HOELDER_RTOL * L:
                violations.append(
                    {"index": index, "check": "hoelder", "n": n, "slack": ho, "profile": params}
                )

    if replay is not None:
        for index, params in enumerate(replay):
            try:
                profile = geometry.initial_profile("fourier", params, grid)
            except (CurveFlowError, ValueError) as exc:
                invalid_inputs.append({"index": index, "error": str(exc), "profile": params})
                continue
            check_one(profile, dict(params), index)
    else:
        rng = np.random.default_rng(seed)
        for index in range(count):
            profile, params = geometry.random_convex_profile(grid, rng)
            check_one(profile, params, index)

    return {
        "count": count if replay is None else checked + len(invalid_inputs),
        "seed": seed,
        "n_values": list(n_values),
        "grid_size": grid_size,
        "profiles_checked": checked,
        "worst_slack": {k: _clean(v if v != math.inf else math.nan) for k, v in worst.items()},
        "violations": violations,
        "invalid_inputs": invalid_inputs,
        "passed": not violations,
    }


def verify_report(
    sizes: Sequence[int] = (512, 1024),
    horizon: float = 0.1,
    variant: str = "flow1",
    n: float = 1.0,
    axes: tuple[float, float] = (2.0, 1.0),
    hausdorff_bound: float = 1e-3,
) -> dict:
    """Field solver vs marker oracle on a short horizon.

    For each size the two solvers advance the same ellipse independently and
    the symmetric Hausdorff distance is recorded; consecutive size doublings
    must at least halve it.  A circle-stationarity probe runs first.
    """
    fv = flow.FlowVariant(variant)
    a, b = axes

    drift = _circle_drift(fv, n)
    cases = []
    for size in sizes:
        config = flow.FlowConfig(
            variant=fv, n=n, grid_size=size, cfl_safety=0.8,
            t_end=horizon, sample_dt=horizon, eps_converged=1e-14,
        )
        profile = geometry.initial_profile("ellipse", {"a": a, "b": b}, geometry.build_grid(size))
        field_run = flow.run(config, profile)
        curve = geometry.reconstruct_curve(field_run.final.profile())

        marker_cfg = flow.FlowConfig(
            variant=fv, n=n, grid_size=size, cfl_safety=0.5, t_end=horizon, sample_dt=horizon
        )
        marker_curve = markers.run_markers(markers.ellipse_markers(a, b, size), marker_cfg, horizon)
        distance = markers.compare(curve, marker_curve)
        cases.append({"size": size, "hausdorff": distance})

    passed = drift["passed"]
    for case in cases:
        if case["size"] == 512:
            case["bound"] = hausdorff_bound
            case["passed"] = case["hausdorff"] <= hausdorff_bound
            passed = passed and case["passed"]
    halving = []
    for prev, nxt in zip(cases, cases[1:]):
        if nxt["size"] == 2 * prev["size"]:
            ratio = nxt["hausdorff"] / prev["hausdorff"]
            ok = ratio <= 0.5
            halving.append({"sizes": [prev["size"], nxt["size"]], "ratio": ratio, "passed": ok})
            passed = passed and ok
    return {
        "variant": variant,
        "n": n,
        "horizon": horizon,
        "axes": [a, b],
        "circle_drift": drift,
        "cases": cases,
        "halving": halving,
        "passed": passed,
    }


def _circle_drift(variant: flow.FlowVariant, n: float, m: int = 1024, radius: float = 1.0) -> dict:
    config = flow.FlowConfig(variant=variant, n=n, grid_size=256, cfl_safety=0.25, t_end=1.0)
    curve = markers.circle_markers(radius, m)
    dt = markers.stable_marker_dt(curve, config)
    stepped = markers.marker_step(curve, config, dt)
    drift = float(np.max(np.hypot(*(stepped.points - curve.points).T)))
    return {"markers": m, "dt": dt, "per_step_drift": drift, "bound": 1e-10, "passed": drift <= 1e-10}
