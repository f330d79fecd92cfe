from pathlib import Path

import pytest

SAMPLE_ROOT = Path(__file__).resolve().parent.parent / "sample_run"


@pytest.fixture(scope="session")
def sample_root() -> Path:
    return SAMPLE_ROOT


@pytest.fixture(scope="session")
def sweep_dirs() -> tuple[Path, ...]:
    """Fixed-k sweep runs (k = 1..16) on one shared stationary stream."""
    dirs = tuple(sorted(SAMPLE_ROOT.glob("k_sweep/k*/seed_0")))
    assert dirs, "committed sample sweep is missing"
    return dirs


@pytest.fixture(scope="session")
def pair_dirs() -> tuple[Path, Path]:
    """An adapting run and a frozen run on the same shift stream."""
    return (
        SAMPLE_ROOT / "shift_ogd" / "seed_0",
        SAMPLE_ROOT / "shift_frozen" / "seed_0",
    )
