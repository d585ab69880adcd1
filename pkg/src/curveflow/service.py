"""HTTP service wrapping the solver: run, sweep, fuzz and verify endpoints.

Thin by design -- every endpoint validates a pydantic request model and
delegates to the same orchestration functions the CLI uses, so a run
submitted over HTTP produces the identical artifacts and verdicts.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__, runner
from .errors import CurveFlowError
from .flow import FlowVariant
from .manifest import RunManifest


class HealthResponse(BaseModel):
    status: str
    version: str


class RunResponse(BaseModel):
    status: str
    exit_code: int
    output_dir: str | None
    summary: dict


class SweepRequest(BaseModel):
    manifests: list[RunManifest] = Field(min_length=1)
    output_root: str | None = None


class SweepResponse(BaseModel):
    results: list[RunResponse]
    worst_exit_code: int


class FuzzRequest(BaseModel):
    count: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)
    n_values: list[float] = Field(default=[1.0, 1.5, 2.0, 3.0])
    grid_size: int = Field(default=256, ge=16)
    replay: list[dict[str, float]] | None = None


class FuzzResponse(BaseModel):
    count: int
    seed: int
    n_values: list[float]
    grid_size: int
    profiles_checked: int
    worst_slack: dict[str, float | None]
    violations: list[dict]
    invalid_inputs: list[dict]
    passed: bool


class VerifyRequest(BaseModel):
    sizes: list[int] = Field(default=[512, 1024], min_length=1)
    horizon: float = Field(default=0.1, gt=0.0)
    variant: FlowVariant = FlowVariant.FLOW1
    n: float = Field(default=1.0, ge=1.0)


class VerifyResponse(BaseModel):
    variant: str
    n: float
    horizon: float
    axes: list[float]
    circle_drift: dict
    cases: list[dict]
    halving: list[dict]
    passed: bool


def create_app() -> FastAPI:
    app = FastAPI(title="curveflow service", version=__version__)

    @app.exception_handler(CurveFlowError)
    async def _domain_error(request: Request, exc: CurveFlowError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/run", response_model=RunResponse)
    def run(manifest: RunManifest) -> RunResponse:
        result = runner.execute_manifest(manifest)
        return RunResponse(
            status=result.status,
            exit_code=result.exit_code,
            output_dir=result.output_dir,
            summary=result.summary,
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(request: SweepRequest) -> SweepResponse:
        results = []
        for index, manifest in enumerate(request.manifests):
            out = None
            if request.output_root is not None:
                out = f"{request.output_root}/run_{index:03d}"
            result = runner.execute_manifest(manifest, output_dir=out)
            results.append(
                RunResponse(
                    status=result.status,
                    exit_code=result.exit_code,
                    output_dir=result.output_dir,
                    summary=result.summary,
                )
            )
        return SweepResponse(
            results=results,
            worst_exit_code=max(r.exit_code for r in results),
        )

    @app.post("/fuzz", response_model=FuzzResponse)
    def fuzz(request: FuzzRequest) -> FuzzResponse:
        report = runner.fuzz_inequalities(
            count=request.count,
            seed=request.seed,
            n_values=request.n_values,
            grid_size=request.grid_size,
            replay=request.replay,
        )
        return FuzzResponse(**report)

    @app.post("/verify", response_model=VerifyResponse)
    def verify(request: VerifyRequest) -> VerifyResponse:
        report = runner.verify_report(
            sizes=request.sizes,
            horizon=request.horizon,
            variant=request.variant.value,
            n=request.n,
        )
        return VerifyResponse(**report)

    return app


app = create_app()
