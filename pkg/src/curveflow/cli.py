"""Command-line client.

Subcommands: run, sweep, fuzz-inequalities, verify, serve.  Everything except
`serve` executes in-process by default; pass --server URL to delegate to a
running service instead (the request/response bodies are the service models,
so both paths produce the same results).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner
from .errors import CurveFlowError, ManifestError
from .manifest import load_manifest


def _print(args: argparse.Namespace, payload: dict) -> None:
    if not args.quiet:
        print(json.dumps(payload, indent=2, default=str))


def _post(server: str, path: str, payload: dict) -> dict:
    import httpx

    response = httpx.post(server.rstrip("/") + path, json=payload, timeout=600.0)
    response.raise_for_status()
    return response.json()


def cmd_run(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.config)
    except (ManifestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return runner.EXIT_INVALID
    if args.server:
        body = manifest.model_dump()
        if args.output_dir:
            body["output_dir"] = args.output_dir
        reply = _post(args.server, "/run", body)
        _print(args, reply["summary"])
        return int(reply["exit_code"])
    result = runner.execute_manifest(manifest, output_dir=args.output_dir)
    _print(args, result.summary)
    return result.exit_code


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        results = runner.sweep(args.config_dir, output_root=args.output_dir, jobs=args.jobs)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return runner.EXIT_INVALID
    _print(args, {"results": [{"manifest": p, "exit_code": c} for p, c in results]})
    return max(code for _, code in results)


def cmd_fuzz(args: argparse.Namespace) -> int:
    replay = None
    if args.replay:
        replay = json.loads(Path(args.replay).read_text())
    if args.server:
        payload = {
            "count": args.count,
            "seed": args.seed,
            "n_values": args.n,
            "grid_size": args.grid_size,
            "replay": replay,
        }
        report = _post(args.server, "/fuzz", payload)
    else:
        report = runner.fuzz_inequalities(
            count=args.count,
            seed=args.seed,
            n_values=args.n,
            grid_size=args.grid_size,
            replay=replay,
        )
    _print(args, report)
    return runner.EXIT_OK if report["passed"] else runner.EXIT_FAILURE


def cmd_verify(args: argparse.Namespace) -> int:
    if args.server:
        payload = {
            "sizes": args.sizes,
            "horizon": args.horizon,
            "variant": args.variant,
            "n": args.n,
        }
        report = _post(args.server, "/verify", payload)
    else:
        report = runner.verify_report(
            sizes=args.sizes, horizon=args.horizon, variant=args.variant, n=args.n
        )
    _print(args, report)
    return runner.EXIT_OK if report["passed"] else runner.EXIT_FAILURE


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("curveflow.service:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curveflow",
        description="Nonlocal inverse-curvature flows of convex plane curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one run manifest")
    run_p.add_argument("config", help="path to a JSON run manifest")
    run_p.add_argument("--output-dir", default=None)
    run_p.add_argument("--quiet", action="store_true")
    run_p.add_argument("--server", default=None, help="delegate to a running service")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run every manifest in a directory")
    sweep_p.add_argument("config_dir")
    sweep_p.add_argument("--output-dir", default=None)
    sweep_p.add_argument("--jobs", type=int, default=None)
    sweep_p.add_argument("--quiet", action="store_true")
    sweep_p.set_defaults(func=cmd_sweep)

    fuzz_p = sub.add_parser("fuzz-inequalities", help="random convex profiles vs the integral inequalities")
    fuzz_p.add_argument("--count", type=int, default=1000)
    fuzz_p.add_argument("--seed", type=int, default=0)
    fuzz_p.add_argument("--n", type=float, action="append", default=None,
                        help="exponent to test; repeatable (default 1 1.5 2 3)")
    fuzz_p.add_argument("--grid-size", type=int, default=256)
    fuzz_p.add_argument("--replay", default=None, help="JSON file of fourier params to recheck")
    fuzz_p.add_argument("--quiet", action="store_true")
    fuzz_p.add_argument("--server", default=None)
    fuzz_p.set_defaults(func=cmd_fuzz)

    verify_p = sub.add_parser("verify", help="field solver vs marker oracle comparison suite")
    verify_p.add_argument("--sizes", type=int, nargs="+", default=[512, 1024])
    verify_p.add_argument("--horizon", type=float, default=0.1)
    verify_p.add_argument("--variant", choices=["flow1", "flow2"], default="flow1")
    verify_p.add_argument("--n", type=float, default=1.0)
    verify_p.add_argument("--quiet", action="store_true")
    verify_p.add_argument("--server", default=None)
    verify_p.set_defaults(func=cmd_verify)

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "n", "skip") is None:
        args.n = [1.0, 1.5, 2.0, 3.0]
    try:
        return args.func(args)
    except CurveFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return runner.EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
