"""Regenerate the committed golden report tree for the toy dataset.

Run from the repository root after an intentional output-format change:
    python tests/data/make_golden.py
"""

import shutil
from pathlib import Path

from lobtail.cli import RunConfig, run_pipeline
from lobtail.ingest import MarketHours
from lobtail.cli import AssetConfig

HERE = Path(__file__).parent
GOLDEN = HERE.parent / "golden" / "toy_run"


def golden_config(output_dir: Path) -> RunConfig:
    return RunConfig(
        input_dir=HERE / "toy_ticks",
        output_dir=output_dir,
        assets=[AssetConfig(name="TOY", hours=MarketHours(open_s=32400, close_s=39600))],
        resolutions_s=[10],
        levels=[1],
        seed=7,
    )


if __name__ == "__main__":
    if GOLDEN.exists():
        shutil.rmtree(GOLDEN)
    rc = run_pipeline(golden_config(GOLDEN))
    count = sum(1 for _ in GOLDEN.rglob("*") if _.is_file())
    print(f"exit {rc}; wrote {count} files under {GOLDEN}")
