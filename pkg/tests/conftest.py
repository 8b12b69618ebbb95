import numpy as np
import pytest

from ftspan.gen import instance
from ftspan.metric import Metric, normalize


def line_metric(*coords: float) -> Metric:
    """Normalized 1D metric from raw coordinates (min gap scaled to 64)."""
    pts = np.asarray(coords, dtype=np.float64).reshape(-1, 1)
    return normalize(Metric(coords=pts))


def uniform_metric(n: int, dim: int = 2, seed: int = 0) -> Metric:
    return normalize(instance("uniform", n, dim, seed))


@pytest.fixture
def three_line() -> Metric:
    """The {0, 64, 640} line: ids 0, 1, 2."""
    return line_metric(0.0, 1.0, 10.0)


@pytest.fixture
def short_line() -> Metric:
    """The {0, 64, 128} line: ids 0, 1, 2."""
    return line_metric(0.0, 1.0, 2.0)
