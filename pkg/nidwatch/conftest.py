"""
Shared pytest fixtures for nidwatch.
"""

import sys
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

# Make the repo root importable when pytest is run from inside nidwatch/
sys.path.insert(0, str(Path(__file__).parent.parent))

from nidwatch.represent import DocDistribution

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale simulations (deselect with -m 'not slow')")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(20200311)


def make_distributions(P, source="politiken", start=date(2019, 12, 1), per_day=1):
    """Wrap rows of P as time-sorted DocDistributions, ``per_day`` documents per date."""
    return [
        DocDistribution(
            id=f"{source}-{i:04d}",
            date=start + timedelta(days=i // per_day),
            source=source,
            p=np.asarray(row, dtype=float),
        )
        for i, row in enumerate(P)
    ]


@pytest.fixture
def make_dists():
    return make_distributions


@pytest.fixture
def random_series(rng):
    """30 random documents on a 6-simplex."""
    return make_distributions(rng.dirichlet(np.ones(6), size=30))
