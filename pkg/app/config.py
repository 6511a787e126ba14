from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .models import ColorConversion, ExtractorConfig, RffConfig, ScaleRule, TrainConfig


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="WAVSEG_", extra="ignore"
    )

    LOG_LEVEL: str = Field(default="INFO", description="Root logging level")
    WORKERS: int = Field(default=1, ge=1, description="Worker threads for per-image predict/eval")
    CHUNK_PIXELS: int = Field(default=4096, ge=1, description="Pixels per RFF/classifier batch")


settings = Settings()


_KEY_ALIASES = {"mtilde": "m_tilde", "lam": "lambda", "d": "depth", "j": "J", "levels": "J"}


class RunConfig(BaseModel):
    """Every tunable of a train/tune/eval run; validated before any computation."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    gamma: float | None = Field(default=None, gt=0, description="RBF parameter; None selects it from the data")
    lam: float = Field(default=1e-4, gt=0, alias="lambda")
    m_tilde: int = Field(default=5000, ge=1)
    scales: tuple[int, ...] = (1,)
    sample_frac: float = Field(default=0.02, gt=0, le=1)
    epochs: int = Field(default=5, ge=1)
    seed: int = Field(default=0, ge=0)
    rff_seed: int = Field(default=0, ge=0, lt=2**64)
    t0: float | None = Field(default=None, gt=0)
    J: int = Field(default=4, ge=1, le=255)
    depth: int = Field(default=2, ge=1, le=2)
    pool_factor: int = Field(default=2, ge=1, le=255)
    scale_rule: ScaleRule = ScaleRule.NON_DECREASING
    color: ColorConversion = ColorConversion.YUV
    boundary_radius: float = Field(default=3.0, ge=0)
    class_count: int | None = Field(default=None, ge=1, le=255)

    @field_validator("scales", mode="before")
    @classmethod
    def _parse_scales(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(int(part) for part in value.split(",") if part.strip())
        if isinstance(value, int):
            return (value,)
        return value

    @field_validator("gamma", "t0", "class_count", mode="before")
    @classmethod
    def _auto_is_unset(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() in {"", "auto", "none"}:
            return None
        return value

    @model_validator(mode="after")
    def _check_extractor(self) -> RunConfig:
        self.extractor_config()
        return self

    def extractor_config(self) -> ExtractorConfig:
        return ExtractorConfig(
            J=self.J,
            D=self.depth,
            pool_factor=self.pool_factor,
            image_scales=tuple(self.scales),
            scale_rule=self.scale_rule,
        )

    def rff_config(self, gamma: float) -> RffConfig:
        return RffConfig(m_tilde=self.m_tilde, gamma=gamma, seed=self.rff_seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(lam=self.lam, epochs=self.epochs, seed=self.seed, t0=self.t0)


def _normalise_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return _KEY_ALIASES.get(key.lower(), key if key == "J" else key.lower())


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse `key = value` lines; `#` starts a comment."""
    path = Path(path)
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        values[_normalise_key(key)] = value.strip()
    return values


def build_run_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """File values first, then command-line overrides (None means "not given")."""
    values: dict[str, Any] = dict(load_config_file(path)) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[_normalise_key(key)] = value
    return RunConfig.model_validate(values)


class ConfigurationError(ValueError):
    """Invalid run configuration (bad file, unknown key or out-of-range value)."""
