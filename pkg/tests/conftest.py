import datetime
from pathlib import Path

import pytest

from lobtail.core import SeriesKey, Side, VolumeSeries

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def toy_ticks_dir() -> Path:
    return DATA_DIR / "toy_ticks"


def make_key(**overrides) -> SeriesKey:
    base = dict(
        asset="TOY",
        trading_day=datetime.date(2010, 1, 4),
        side=Side.BID,
        level=1,
        resolution_s=10,
    )
    base.update(overrides)
    return SeriesKey(**base)


def make_series(values, start_s=10, resolution_s=10, **key_overrides) -> VolumeSeries:
    key = make_key(resolution_s=resolution_s, **key_overrides)
    n = len(values)
    timestamps = [start_s + i * resolution_s for i in range(n)]
    return VolumeSeries(key=key, timestamps=timestamps, values=values)
