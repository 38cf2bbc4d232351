"""Shared fixtures for the risk-attitude test suite."""

from pathlib import Path
from typing import Callable, Iterable, Sequence

import pytest

from src.core.estimation import Scheme, YearMonth
from src.core.synthetic import log_agent_market, month_range, regime_break_market
from src.utils.data_io import MarketDataset, write_market_csv


@pytest.fixture(autouse=True)
def _isolate_settings(tmp_path, monkeypatch):
    # Without this a developer's ~/.config/riskattitude/settings.json would
    # change defaults under every CLI and config test.
    monkeypatch.setattr(
        "src.utils.config.DEFAULT_SETTINGS_PATH",
        tmp_path / ".config" / "riskattitude" / "settings.json",
    )


@pytest.fixture
def tmp_config(tmp_path):
    """Provide a temporary config file path."""
    return tmp_path / "settings.json"


@pytest.fixture
def write_csv(tmp_path) -> Callable[..., Path]:
    """Write raw CSV text (lines joined with LF) and return its path."""

    def _write(lines: Iterable[str], name: str = "market.csv") -> Path:
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


@pytest.fixture
def market_rows() -> Callable[..., list]:
    """CSV data lines for n consecutive months with simple deterministic values."""

    def _rows(n: int, start: YearMonth = YearMonth(2007, 1)) -> list:
        rows = []
        for i, d in enumerate(month_range(start, n)):
            ret = 0.01 if i % 2 == 0 else -0.005
            rows.append(f"{d},{ret},{10 + 0.1 * i},0.03")
        return rows

    return _rows


@pytest.fixture(scope="session")
def log_market() -> MarketDataset:
    """Log-utility market, 360 periods, expanding:24 pricing."""
    return log_agent_market(n=360, seed=7, scheme=Scheme("expanding", 24))


@pytest.fixture(scope="session")
def break_market() -> MarketDataset:
    return regime_break_market()


@pytest.fixture
def log_market_csv(tmp_path, log_market) -> Path:
    return write_market_csv(log_market, tmp_path / "synth_log.csv")


@pytest.fixture
def break_market_csv(tmp_path, break_market) -> Path:
    return write_market_csv(break_market, tmp_path / "synth_break.csv")


def dated(values: Sequence[float], start: YearMonth = YearMonth(2000, 1)) -> list:
    """[(date, value)] over consecutive months."""
    return list(zip(month_range(start, len(values)), values))
