"""Run manifests: the flat JSON configuration document for one run.

Unknown keys are fatal and every invariant is checked up front; a manifest
that validates is everything needed to reproduce a run bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ClosureViolationError, ManifestParseError, ManifestValidationError
from .flow import FlowConfig, FlowVariant
from .geometry import RadiusProfile, build_grid, initial_profile, parse_fourier_key

FORMAT_VERSION = "1"

_FAMILY_PARAMS: dict[str, set[str]] = {
    "circle": {"r"},
    "ellipse": {"a", "b"},
    "cosine": {"r0", "eps", "m"},
}


class RunManifest(BaseModel):
    """Validated configuration for one flow run."""

    model_config = ConfigDict(extra="forbid")

    format_version: Literal["1"] = FORMAT_VERSION
    variant: FlowVariant
    n: float = Field(ge=1.0, description="exponent of the 1/kappa^n speed, n >= 1")
    family: Literal["circle", "ellipse", "cosine", "fourier"]
    params: dict[str, float]
    grid_size: int = Field(default=512, ge=16)
    cfl_safety: float = Field(default=0.25, gt=0.0, le=1.0)
    t_end: float = Field(default=10.0, gt=0.0)
    sample_dt: float = Field(default=0.01, gt=0.0)
    eps_blowup: float = Field(default=1e-8, gt=0.0)
    eps_converged: float = Field(default=1e-10, gt=0.0)
    closure_projection: bool = False
    seed: int = Field(default=0, ge=0)
    output_dir: str | None = None

    @field_validator("grid_size")
    @classmethod
    def _even_grid(cls, v: int) -> int:
        if v % 2 != 0:
            raise ValueError(f"grid_size must be even, got {v}")
        return v

    @model_validator(mode="after")
    def _family_params(self) -> "RunManifest":
        if self.family == "fourier":
            if "a0" not in self.params:
                raise ValueError("fourier family requires parameter 'a0'")
            for key in self.params:
                if key == "a0":
                    continue
                try:
                    parse_fourier_key(key)
                except ClosureViolationError as exc:
                    raise ValueError(str(exc)) from None
            return self
        required = _FAMILY_PARAMS[self.family]
        given = set(self.params)
        if given != required:
            missing = sorted(required - given)
            extra = sorted(given - required)
            parts = []
            if missing:
                parts.append(f"missing {missing}")
            if extra:
                parts.append(f"unexpected {extra}")
            raise ValueError(f"family {self.family!r} parameters: " + ", ".join(parts))
        return self

    def to_flow_config(self) -> FlowConfig:
        return FlowConfig(
            variant=self.variant,
            n=self.n,
            grid_size=self.grid_size,
            cfl_safety=self.cfl_safety,
            t_end=self.t_end,
            sample_dt=self.sample_dt,
            eps_blowup=self.eps_blowup,
            eps_converged=self.eps_converged,
            closure_projection=self.closure_projection,
        )

    def build_profile(self) -> RadiusProfile:
        """Construct the initial curve; raises on nonconvex/ill-posed input."""
        return initial_profile(self.family, self.params, build_grid(self.grid_size))


def parse_manifest(text: str) -> RunManifest:
    """Parse and validate a manifest document.

    Raises ManifestParseError (with line/column) for malformed JSON and
    ManifestValidationError (naming the field) for schema violations.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise ManifestParseError("manifest must be a JSON object")
    try:
        return RunManifest.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{loc}: {err['msg']}")
        raise ManifestValidationError("; ".join(lines)) from None


def load_manifest(path: str | Path) -> RunManifest:
    return parse_manifest(Path(path).read_text())
