"""Unit tests for settings and the error hierarchy."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from restpail.config import Config, KeygenConfig
from restpail.errors import (
    BadMagic,
    MessageOutOfRange,
    NotUnitResidue,
    ProtocolStepError,
    RestPailError,
    UnknownId,
)


class TestConfig:
    def test_defaults(self, monkeypatch):
        for var in ("RESTPAIL_BITS", "RESTPAIL_RECOVERY_ATTEMPTS", "RESTPAIL_STORE"):
            monkeypatch.delenv(var, raising=False)
        cfg = Config()
        assert cfg.keygen.prime_rounds >= 40
        assert cfg.keygen.default_bits == 1024
        assert cfg.protocol.recovery_attempts == 3
        assert cfg.bench.warmup == 10
        assert cfg.store.path is None
        assert cfg.audit_db_path.name == "audit.db"

    def test_env_overrides(self, monkeypatch, tmp_path):
        monkeypatch.setenv("RESTPAIL_BITS", "512")
        monkeypatch.setenv("RESTPAIL_BENCH_SIZES", "64, 512")
        monkeypatch.setenv("RESTPAIL_STORE", str(tmp_path / "kgc.bin"))
        monkeypatch.setenv("RESTPAIL_DATA", str(tmp_path))
        cfg = Config()
        assert cfg.keygen.default_bits == 512
        assert cfg.bench.sizes == [64, 512]
        assert cfg.store.path == Path(tmp_path / "kgc.bin")
        assert cfg.data_dir == tmp_path

    def test_bad_env_falls_back(self, monkeypatch):
        monkeypatch.setenv("RESTPAIL_BITS", "lots")
        assert Config().keygen.default_bits == 1024

    def test_too_few_rounds(self):
        with pytest.raises(ValidationError):
            KeygenConfig(prime_rounds=8)

    def test_ensure_dirs(self, monkeypatch, tmp_path):
        monkeypatch.setenv("RESTPAIL_DATA", str(tmp_path / "data"))
        cfg = Config()
        cfg.ensure_dirs()
        assert cfg.data_dir.is_dir()


class TestErrors:
    def test_codes_and_exit_codes(self):
        assert NotUnitResidue().code == "not_unit_residue"
        assert NotUnitResidue().exit_code == 2
        assert MessageOutOfRange().exit_code == 1
        assert BadMagic("magic").exit_code == 3
        assert UnknownId().exit_code == 2

    def test_to_dict(self):
        assert UnknownId("no such id").to_dict() == {"code": "unknown_id", "message": "no such id"}

    def test_wire_errors_name_the_field(self):
        exc = BadMagic("magic", "expected RP")
        assert exc.field == "magic"
        assert "magic" in str(exc)

    def test_step_error_keeps_cause(self):
        cause = NotUnitResidue("bad")
        exc = ProtocolStepError("accs.step2", cause)
        assert exc.step == "accs.step2"
        assert exc.cause is cause
        assert isinstance(exc, RestPailError)
