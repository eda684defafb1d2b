"""restpail configuration: all tuneable settings in one place."""

from __future__ import annotations

import os
from pathlib import Path

from pydantic import BaseModel, Field


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


def _env_int_csv(name: str, default: list[int]) -> list[int]:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        vals = [int(v.strip()) for v in raw.split(",") if v.strip()]
    except ValueError:
        return default
    return vals if vals else default


def _env_path(name: str) -> Path | None:
    raw = os.environ.get(name, "").strip()
    return Path(raw) if raw else None


def _default_data_dir() -> Path:
    """Resolve the data directory: $RESTPAIL_DATA or ./data."""
    env = os.environ.get("RESTPAIL_DATA")
    if env:
        return Path(env)
    return Path.cwd() / "data"


class KeygenConfig(BaseModel):
    """Knobs for prime, parameter and key generation."""

    prime_rounds: int = Field(
        default_factory=lambda: _env_int("RESTPAIL_PRIME_ROUNDS", 64),
        ge=40,
        description="Miller-Rabin rounds per primality test (40 rounds bound the error by 2^-80)",
    )
    prime_attempts: int = Field(
        default_factory=lambda: _env_int("RESTPAIL_PRIME_ATTEMPTS", 2_000_000),
        ge=1,
        description="Candidate budget for one safe-prime search",
    )
    param_attempts: int = Field(
        default=1_000, ge=1, description="Prime-pair budget per parameter set"
    )
    base_attempts: int = Field(default=1_000, ge=1, description="Draws per base search")
    key_attempts: int = Field(
        default=64, ge=1, description="Redraws for degenerate keys and shares"
    )
    default_bits: int = Field(default_factory=lambda: _env_int("RESTPAIL_BITS", 1024), ge=10)


class ProtocolConfig(BaseModel):
    """Retry budgets for the two-party protocols and the KGC."""

    sample_attempts: int = Field(default=64, ge=1, description="Redraws of ACCS masks a and d")
    id_attempts: int = Field(default=64, ge=1, description="Redraws of a colliding identity")
    recovery_attempts: int = Field(
        default_factory=lambda: _env_int("RESTPAIL_RECOVERY_ATTEMPTS", 3),
        ge=1,
        description="Rounds of KGC answer + user check before recovery gives up",
    )


class BenchConfig(BaseModel):
    """Benchmark harness defaults."""

    iterations: int = Field(default_factory=lambda: _env_int("RESTPAIL_BENCH_ITERS", 1000), ge=1)
    warmup: int = Field(default=10, ge=0, description="Iterations run and discarded before timing")
    sizes: list[int] = Field(
        default_factory=lambda: _env_int_csv("RESTPAIL_BENCH_SIZES", [512, 768, 1024]),
    )
    allowed_sizes: frozenset[int] = Field(
        default=frozenset({64, 512, 768, 1024, 1280, 1536, 1792, 2048}),
        description="64 is the desk-scale toy size; the rest follow the published size ladder",
    )


class StoreConfig(BaseModel):
    """Location of the KGC certificate store."""

    path: Path | None = Field(default_factory=lambda: _env_path("RESTPAIL_STORE"))


class Config(BaseModel):
    """Top-level restpail configuration."""

    data_dir: Path = Field(default_factory=_default_data_dir)
    audit_db_filename: str = Field(default="audit.db")
    log_level: str = Field(default_factory=lambda: os.environ.get("RESTPAIL_LOG_LEVEL", "warning"))
    keygen: KeygenConfig = Field(default_factory=KeygenConfig)
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)
    store: StoreConfig = Field(default_factory=StoreConfig)

    @property
    def audit_db_path(self) -> Path:
        return self.data_dir / self.audit_db_filename

    def ensure_dirs(self) -> None:
        """Create the data directory if it doesn't exist."""
        self.data_dir.mkdir(parents=True, exist_ok=True)


# Singleton, importable everywhere as `from restpail.config import settings`
settings = Config()
