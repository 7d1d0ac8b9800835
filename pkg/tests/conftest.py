import math

import pytest

from cutadvect import cli


@pytest.fixture(scope="session")
def circle_runs():
    """Shared cache of solved shrinking-circle steps, keyed by (ncells, profile)."""
    cache = {}

    def get(ncells, profile=("const", 1.0)):
        key = (ncells, profile)
        if key not in cache:
            cache[key] = cli.run_single(cli.RunConfig(ncells=ncells, u_old=profile))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def binary_profile():
    return ("binary", 0.2 * math.pi, 0.4 * math.pi, 1.0)
