import numpy as np
import pytest
from fastapi.testclient import TestClient

from logdrift.service.app import create_app


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture
def demo_log_lines():
    """Small synthetic app log: three stable templates plus one error line."""
    lines = []
    t0 = 1_600_000_000_000
    for i in range(60):
        ts = t0 + i * 1000
        if i % 3 == 0:
            lines.append((ts, f"request served user={i} in 12ms"))
        elif i % 3 == 1:
            lines.append((ts, f"cache hit key=k{i}"))
        else:
            lines.append((ts, f"request served user={i} in 40ms"))
    return lines


def make_pools(overlap=0.0, seed=0):
    from logdrift import synthetic_pools

    return synthetic_pools(
        num_templates=10,
        lines_per_window=200,
        pool_size=100,
        overlap=overlap,
        seed=seed,
    )


@pytest.fixture
def disjoint_pools():
    return make_pools(overlap=0.0, seed=42)


def assert_vec(actual: np.ndarray, expected, rtol=1e-12, atol=1e-12):
    np.testing.assert_allclose(actual, np.asarray(expected, dtype=float), rtol=rtol, atol=atol)
