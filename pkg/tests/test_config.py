import pytest
from pydantic import ValidationError

from dyadic.config import Settings, resolve_max_scale, resolve_threads


def test_defaults(monkeypatch):
    for name in ("DYADIC_MAX_SCALE", "DYADIC_THREADS", "DYADIC_JSON_LOGS", "DYADIC_QC_RECURSION"):
        monkeypatch.delenv(name, raising=False)
    settings = Settings.from_env()
    assert settings.max_scale == 26
    assert settings.threads == 1
    assert settings.qc_recursion == "previous"
    assert not settings.json_logs


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("DYADIC_MAX_SCALE", "20")
    monkeypatch.setenv("DYADIC_THREADS", "4")
    monkeypatch.setenv("DYADIC_JSON_LOGS", "yes")
    monkeypatch.setenv("DYADIC_QC_RECURSION", "fixed-point")
    monkeypatch.setenv("DYADIC_LOG_LEVEL", "debug")
    settings = Settings.from_env()
    assert (settings.max_scale, settings.threads) == (20, 4)
    assert settings.json_logs
    assert settings.qc_recursion == "fixed-point"
    assert settings.log_level == "DEBUG"


def test_invalid_environment(monkeypatch):
    monkeypatch.setenv("DYADIC_QC_RECURSION", "sideways")
    with pytest.raises(ValidationError):
        Settings.from_env()


def test_explicit_values_win():
    assert resolve_max_scale(12) == 12
    assert resolve_threads(0) == 1
    assert resolve_threads(3) == 3
