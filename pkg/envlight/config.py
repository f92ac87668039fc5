"""
Typed run configuration.

Defaults come from ``settings.ENVLIGHT`` (see lightsite/settings.py) so a
project can retune them in one place; every field can still be overridden
per run from a YAML config file.
"""
import hashlib
import json
import logging
from typing import Any, Dict, Literal, Optional, Type, TypeVar

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .exceptions import ContractViolation

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ESTIMATION_MODES = ("full", "diffuse-only", "specular-only", "no-decomposition")

ModelT = TypeVar("ModelT", bound=BaseModel)


def envlight_setting(key: str, default: Any = None) -> Any:
    """Read one entry of ``settings.ENVLIGHT``, falling back to ``default``."""
    try:
        values = getattr(settings, "ENVLIGHT", {})
    except ImproperlyConfigured:
        return default
    return values.get(key, default)


def _section(name: str, key: str, default: Any) -> Any:
    return (envlight_setting(name, {}) or {}).get(key, default)


class DiffuseSolveConfig(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(default_factory=lambda: _section("SOLVER", "lambda", 1e-3), alias="lambda", ge=0.0)
    max_iter: int = Field(default_factory=lambda: _section("SOLVER", "max_iter", 500), ge=1)
    tol: float = Field(default_factory=lambda: _section("SOLVER", "tol", 1e-6), ge=0.0)
    nonneg: bool = Field(default_factory=lambda: _section("SOLVER", "nonneg", True))
    polish: bool = True


class FusionConfig(BaseModel):
    """
    Specular trust per bin is ``spec_weight_at_full_count * min(n / count_saturation, 1)``
    with ``n`` the bin's observation count (fractional for splat-filled bins).
    The gain is fitted on both maps blurred by ``gain_sigma_deg``.
    """
    model_config = ConfigDict(frozen=True)

    spec_weight_at_full_count: float = Field(
        default_factory=lambda: _section("FUSION", "spec_weight_at_full_count", 0.8), ge=0.0, le=1.0)
    count_saturation: float = Field(
        default_factory=lambda: _section("FUSION", "count_saturation", 1), gt=0.0)
    splat_sigma_deg: float = Field(
        default_factory=lambda: _section("FUSION", "splat_sigma_deg", 2.0), ge=0.0)
    gain_fit: bool = Field(default_factory=lambda: _section("FUSION", "gain_fit", True))
    gain_sigma_deg: float = Field(default_factory=lambda: _section("FUSION", "gain_sigma_deg", 10.0), ge=0.0)


class RenderConfig(BaseModel):
    """Forward-renderer quality knobs."""
    model_config = ConfigDict(frozen=True)

    light_face_res: int = Field(default_factory=lambda: _section("RENDER", "light_face_res", 16), ge=1)
    specular_samples: int = Field(default_factory=lambda: _section("RENDER", "specular_samples", 64), ge=1)
    seed: int = Field(default_factory=lambda: envlight_setting("SEED", 0), ge=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    schema_version: int = SCHEMA_VERSION
    seed: int = Field(default_factory=lambda: envlight_setting("SEED", 0), ge=0)
    crop: int = Field(default_factory=lambda: envlight_setting("CROP", 384), gt=0)
    cube_face_res: int = Field(default_factory=lambda: envlight_setting("CUBE_FACE_RES", 8), gt=0)
    irradiance_res: int = Field(default_factory=lambda: envlight_setting("IRRADIANCE_RES", 32), gt=0)
    env_width: int = Field(default_factory=lambda: envlight_setting("ENV_WIDTH", 256), gt=0)
    env_height: int = Field(default_factory=lambda: envlight_setting("ENV_HEIGHT", 128), gt=0)
    alpha: float = Field(default_factory=lambda: envlight_setting("TEMPORAL_ALPHA", 0.3), ge=0.0, le=1.0)
    mode: Literal["full", "diffuse-only", "specular-only", "no-decomposition"] = "full"
    decomposition: Literal["dichromatic", "gt"] = "dichromatic"
    bilateral_sigma_space: float = Field(default=3.0, gt=0.0)
    bilateral_sigma_range: float = Field(default=0.02, gt=0.0)
    solver: DiffuseSolveConfig = Field(default_factory=DiffuseSolveConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    render: RenderConfig = Field(default_factory=RenderConfig)

    @model_validator(mode="after")
    def _check(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema_version {self.schema_version}")
        if self.env_width != 2 * self.env_height:
            raise ValueError("env_width must be twice env_height")
        return self

    def digest(self) -> str:
        """Short stable hash of the configuration, used to label benchmark records."""
        payload = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True)
        return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]


def build(model: Type[ModelT], data: Optional[Dict[str, Any]] = None, **overrides) -> ModelT:
    """
    Validate ``data`` into ``model``.

    Raises:
        ContractViolation: with pydantic's messages joined into one line.
    """
    payload = dict(data or {})
    payload.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or model.__name__}: {err['msg']}"
            for err in exc.errors()
        )
        raise ContractViolation(f"invalid {model.__name__}: {problems}") from exc


def load_run_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """Load a RunConfig from a YAML file (or defaults when ``path`` is None)."""
    data: Dict[str, Any] = {}
    if path:
        from .formats import read_yaml

        data = read_yaml(path)
        logger.info(f"Loaded run configuration from {path}")
    return build(RunConfig, data, **overrides)
