import itertools

import numpy as np
import pytest

from binary_margins import Margins, gale_ryser_feasible


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the full-scale checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def small_margins(max_m=4, max_n=4, limit=None):
    """Every feasible margin pair up to the given shape, with nonempty d."""
    out = []
    for m in range(1, max_m + 1):
        for n in range(1, max_n + 1):
            for r in itertools.product(range(n + 1), repeat=m):
                for c in itertools.product(range(m + 1), repeat=n):
                    if sum(r) != sum(c) or sum(r) == 0:
                        continue
                    mg = Margins(r, c)
                    if gale_ryser_feasible(mg):
                        out.append(mg)
    if limit is not None:
        rng = np.random.default_rng(0)
        idx = rng.choice(len(out), size=min(limit, len(out)), replace=False)
        out = [out[i] for i in sorted(idx)]
    return out
