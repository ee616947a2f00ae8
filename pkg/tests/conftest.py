"""Shared fixtures and a tiny process-parallel map for seed sweeps."""

from concurrent.futures import ProcessPoolExecutor

import pytest

from pesuff.inference import calibrate_independence
from pesuff.ordinal import SegmentConfig

WORKERS = 2


def pmap(fn, jobs, chunksize=1):
    """Order-preserving process map; falls back to serial for tiny job lists."""
    if len(jobs) < 4:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        return list(pool.map(fn, jobs, chunksize=chunksize))


@pytest.fixture(scope="session")
def small_calib():
    """Cheap calibration for unit tests: d=3, tau=1, N=800, R=100."""
    cfg = SegmentConfig(3, 1)
    return calibrate_independence(cfg, 800, paths=100, seed=42, replications=100)
