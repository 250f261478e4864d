# tests/conftest.py
import numpy as np
import pytest

from models.gwtree import make_offspring_law, tree_from_offspring


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def binary_law():
    return make_offspring_law('binary')


@pytest.fixture
def geometric_law():
    return make_offspring_law('geometric-half')


def path_tree(n):
    """Tree on n vertices where every vertex but the last has one child."""
    return tree_from_offspring([1] * (n - 1) + [0])


def replay_records(tree, jumps):
    """
    Naive event-driven k-cut simulation.

    Replays every clock ring in time order (ties: smaller vertex first) and
    counts a ring as an r-record when its vertex is still attached to the
    root; a vertex is removed at its k-th ring.

    Returns:
        list: Record counts per rank r = 1..k.
    """
    n, k = jumps.shape
    events = sorted((jumps[v, r], v, r) for v in range(n) for r in range(k))
    removed = np.zeros(n, dtype=bool)
    counts = [0] * k

    def attached(v):
        while v >= 0:
            if removed[v]:
                return False
            v = tree.parent[v]
        return True

    for _, v, r in events:
        if removed[tree.root]:
            break
        if attached(v):
            counts[r] += 1
            if r == k - 1:
                removed[v] = True
    return counts
