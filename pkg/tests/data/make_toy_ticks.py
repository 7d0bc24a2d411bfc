"""Regenerate the bundled toy tick files (already committed; run only if the
format changes).  Two trading days of event-driven depth updates for one
synthetic asset, both sides, five levels, 09:00-11:00 local."""

from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
OPEN_S = 9 * 3600
CLOSE_S = 11 * 3600


def make_day(day: str, seed: int) -> None:
    rng = np.random.default_rng(seed)
    n_events = 8000
    # event times spread over the session, starting slightly before the open
    times_s = np.sort(rng.uniform(OPEN_S - 60, CLOSE_S, n_events))
    rows = []
    state = {}
    for t in times_s:
        side = "B" if rng.uniform() < 0.5 else "A"
        level = int(rng.integers(1, 6))
        base = 60.0 / level
        vol = rng.lognormal(mean=np.log(base), sigma=0.6)
        if rng.uniform() < 0.01:  # occasional outsized order
            vol *= rng.pareto(1.5) + 2.0
        state[(side, level)] = max(int(round(vol)), 1)
        price = 100.0 + (0.01 * level if side == "A" else -0.01 * level)
        rows.append(
            f"{int(t * 1e9)},{side},{level},{price:.2f},{state[(side, level)]}"
        )
    out = HERE / "toy_ticks" / "TOY" / f"{day}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        "timestamp_ns,side,level,price,volume\n" + "\n".join(rows) + "\n",
        encoding="utf-8",
        newline="\n",
    )


if __name__ == "__main__":
    make_day("2010-01-04", seed=20100104)
    make_day("2010-01-05", seed=20100105)
    print("wrote toy tick files under", HERE / "toy_ticks" / "TOY")
