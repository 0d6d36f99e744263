import itertools
from math import comb

import numpy as np
import pytest
from scipy import stats

from magic_simplex.sampling import (
    LatticeTooLarge,
    Region,
    SampleSpec,
    family_a_coords,
    lattice_node_count,
    sample,
    sample_enclosure,
    sample_family_a,
    sample_lattice,
    sample_simplex,
)


def enclosure_volume(d):
    # P(all coordinates <= 1/d) for a uniform point of the (d^2 - 1)-simplex
    n, t = d * d, 1.0 / d
    return sum((-1) ** j * comb(n, j) * max(0.0, 1 - j * t) ** (n - 1) for j in range(n + 1))


def test_simplex_points_are_valid_and_deterministic():
    spec = SampleSpec(3, Region.SIMPLEX, 5000, seed=11)
    C = sample_simplex(spec)
    assert C.shape == (5000, 9)
    assert np.all(C >= 0) and np.allclose(C.sum(axis=1), 1.0)
    assert np.array_equal(C, sample(spec))
    assert not np.array_equal(C, sample_simplex(SampleSpec(3, Region.SIMPLEX, 5000, seed=12)))


def test_simplex_prefix_stable():
    a = sample_simplex(SampleSpec(2, Region.SIMPLEX, 100, seed=3))
    b = sample_simplex(SampleSpec(2, Region.SIMPLEX, 3000, seed=3))
    assert np.array_equal(a, b[:100])


def test_simplex_marginal_is_beta():
    # one coordinate of a uniform point on the (n-1)-simplex is Beta(1, n-1)
    C = sample_simplex(SampleSpec(3, Region.SIMPLEX, 20000, seed=5))
    assert stats.kstest(C[:, 4], stats.beta(1, 8).cdf).pvalue > 1e-3


def test_enclosure_acceptance_matches_volume():
    info = {}
    C = sample_enclosure(SampleSpec(3, Region.ENCLOSURE, 20000, seed=2), stats=info)
    assert np.all(C <= 1 / 3) and np.allclose(C.sum(axis=1), 1)
    rate = info["accepted"] / info["drawn"]
    p = enclosure_volume(3)
    assert abs(p - 0.6543) < 1e-3
    assert abs(rate - p) < 4 * np.sqrt(p * (1 - p) / info["drawn"])


def test_family_a():
    params, C = sample_family_a(SampleSpec(3, Region.FAMILY_A, 3000, seed=1))
    assert params.shape == (3000, 3) and C.shape == (3000, 9)
    assert np.all(np.abs(params) <= 1)
    assert np.all(C >= 0) and np.allclose(C.sum(axis=1), 1)
    assert np.allclose(C, family_a_coords(*params.T))
    c = family_a_coords(1.0, 0.0, 0.0)
    assert np.allclose(c, np.eye(9)[0])


def test_family_a_needs_d3():
    with pytest.raises(ValueError):
        SampleSpec(2, Region.FAMILY_A, 10)


def test_lattice_d2_counts():
    for s in (1, 2, 5):
        L = sample_lattice(SampleSpec(2, Region.LATTICE, steps=s, lattice_range=(0.0, 1.0)))
        # non-negative integer compositions of s into 4 parts
        assert len(L) == comb(s + 3, 3)
        assert np.allclose(L.sum(axis=1), 1) and np.all(L >= 0)
        assert len(np.unique(np.round(L, 12), axis=0)) == len(L)


def test_lattice_d3_counts_brute_force():
    s = 2
    L = sample_lattice(SampleSpec(3, Region.LATTICE, steps=s))
    ref = sum(1 for j in itertools.product(range(s + 1), repeat=9) if sum(j) == 3 * s)
    assert len(L) == ref
    assert np.all(L <= 1 / 3 + 1e-12)


def test_lattice_off_grid_last_coordinate():
    # steps=3 over [0, 0.5] at d=2: last coordinate need not be on the grid
    L = sample_lattice(SampleSpec(2, Region.LATTICE, steps=3, lattice_range=(0.0, 0.5)))
    assert np.allclose(L.sum(axis=1), 1)
    assert np.all((L >= 0) & (L <= 0.5 + 1e-12))


def test_lattice_cap():
    spec = SampleSpec(3, Region.LATTICE, steps=20, lattice_cap=1000)
    assert lattice_node_count(spec) == 21**8
    with pytest.raises(LatticeTooLarge):
        sample_lattice(spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        SampleSpec(1, Region.SIMPLEX, 10)
    with pytest.raises(ValueError):
        SampleSpec(3, Region.SIMPLEX, -1)
    with pytest.raises(ValueError):
        SampleSpec(3, "nowhere", 1)
    assert sample(SampleSpec(3, "simplex", 0)).shape == (0, 9)
