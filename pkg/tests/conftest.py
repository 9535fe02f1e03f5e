import numpy as np
import pytest

from levydc.dynamic_cutting import CutParams
from levydc.fixed_cutting import ArParams
from levydc.measures import LevyModel, TruncatedStableModel


@pytest.fixture
def stable1():
    return TruncatedStableModel(1.0)


@pytest.fixture
def stable05():
    return TruncatedStableModel(0.5)


@pytest.fixture
def stable15():
    return TruncatedStableModel(1.5)


@pytest.fixture
def cut_params():
    return CutParams(epsilon=0.1, h=1e-3, horizon_T=1.0)


@pytest.fixture
def ar_params():
    return ArParams(threshold_eps=0.01, horizon_T=1.0)


def numeric_stable(alpha: float) -> LevyModel:
    """Truncated stable model with closed forms stripped, forcing the
    bisection and quadrature fallbacks."""

    def tail(r):
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, None, 1.0)
        return np.where(r < 1.0, (inside ** (-alpha) - 1.0) / alpha, 0.0)

    return LevyModel(
        tail,
        tail,
        support_radius=1.0,
        alpha=alpha,
        symmetric=True,
        density_pos=lambda m: m ** (-1.0 - alpha) if m <= 1.0 else 0.0,
        density_neg=lambda m: m ** (-1.0 - alpha) if m <= 1.0 else 0.0,
    )
