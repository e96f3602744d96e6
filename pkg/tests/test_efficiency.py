import numpy as np
import pytest

from conftest import random_instance
from xbench.dataset import Dataset, rescale
from xbench.efficiency import extreme_efficient_set, pareto_efficient, reproduction_gap


def test_tiny_classification(tiny):
    c = extreme_efficient_set(tiny)
    assert c.extreme_ids == ["A", "B", "C"]
    assert c.pareto == (True, True, True, False, False)


def test_dominated_unit_is_not_efficient():
    d = Dataset.from_arrays([[1.0], [2.0]], [[1.0], [1.0]], ids=["good", "bad"])
    assert pareto_efficient(d, 0) and not pareto_efficient(d, 1)
    assert extreme_efficient_set(d).E == (0,)


def test_single_dmu():
    d = Dataset.from_arrays([[3.0, 4.0]], [[5.0]])
    c = extreme_efficient_set(d)
    assert c.E == (0,) and c.pareto == (True,)


def test_duplicates_keep_first_occurrence():
    d = Dataset.from_arrays([[1, 4], [1, 4], [4, 1]], [[1], [1], [1]])
    assert extreme_efficient_set(d).E == (0, 2)


def test_same_ray_counts_once():
    d = Dataset.from_arrays([[1.0], [2.0]], [[2.0], [4.0]])
    c = extreme_efficient_set(d)
    assert c.pareto == (True, True)
    assert len(c.E) == 1


def test_weakly_efficient_unit_excluded():
    # on the x2 = 4 extension of A's ray but with extra x1
    d = Dataset.from_arrays([[1, 4], [2, 2], [4, 1], [2, 4]], [[1]] * 4)
    c = extreme_efficient_set(d)
    assert c.E == (0, 1, 2) and not c.pareto[3]


def test_midpoint_is_pareto_but_not_extreme():
    d = Dataset.from_arrays([[1, 4], [4, 1], [2.5, 2.5]], [[1]] * 3)
    c = extreme_efficient_set(d)
    assert c.pareto == (True, True, True)
    assert c.E == (0, 1)


@pytest.mark.parametrize("seed", range(6))
def test_rescaling_leaves_E_unchanged(seed):
    d, E = random_instance(seed)
    f = np.random.default_rng(seed).uniform(0.01, 100, d.m + d.s)
    assert extreme_efficient_set(rescale(d, f)).E == E


@pytest.mark.parametrize("seed", range(6))
def test_efficient_units_reproducible_from_E(seed):
    d, E = random_instance(seed)
    c = extreme_efficient_set(d)
    for j in range(d.n):
        if c.pareto[j]:
            assert reproduction_gap(d.X, d.Y, j, E) <= 1e-7


def test_reproduction_gap_without_generators():
    d = Dataset.from_arrays([[1.0]], [[1.0]])
    assert reproduction_gap(d.X, d.Y, 0, []) == float("inf")
