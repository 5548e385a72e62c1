import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapstrip.errors import (InvalidArgumentError, NearSingularError, PreconditionError,
                              UnsupportedDisorderError)
from lyapstrip.lattice import DisorderSpec
from lyapstrip.schur import (PartitionedOperator, clopper_pearson, eigen_distance_probe,
                             gaussian_symmetric, restricted_inverse, schur_reduce, wegner_probe)

UNIFORM01 = DisorderSpec.uniform(0, 1)


@pytest.fixture(scope="module")
def probe_op():
    return PartitionedOperator(gaussian_symmetric(20, seed=1), (0, 5, 10, 15))


def test_two_by_two_closed_form():
    a, b, d, v0 = 1.3, -0.7, 2.1, 0.4
    p = PartitionedOperator([[a, b], [b, d]], (0,))
    assert schur_reduce(p, [v0])[0, 0] == pytest.approx(1 / (v0 + a - b * b / d), rel=1e-14)


def test_empty_complement():
    T = gaussian_symmetric(4, 0)
    p = PartitionedOperator(T, range(4))
    dv = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(schur_reduce(p, dv), np.linalg.inv(T + np.diag(dv)), rtol=1e-12)


def test_random_30_against_dense():
    T = gaussian_symmetric(30, 7)
    rng = np.random.default_rng(8)
    om1 = tuple(sorted(rng.choice(30, 6, replace=False)))
    p = PartitionedOperator(T, om1)
    dv = rng.uniform(0, 1, 6)
    ref = restricted_inverse(p, dv)
    assert np.linalg.norm(schur_reduce(p, dv) - ref) <= 1e-10 * np.linalg.norm(ref)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 40), data=st.data())
def test_schur_identity_property(n, data):
    seed = data.draw(st.integers(0, 2 ** 32))
    m = data.draw(st.integers(1, min(8, n)))
    rng = np.random.default_rng(seed)
    om1 = tuple(rng.choice(n, m, replace=False).tolist())
    p = PartitionedOperator(gaussian_symmetric(n, seed), om1)
    dv = rng.uniform(-1, 1, m)
    ref = restricted_inverse(p, dv)
    got = schur_reduce(p, dv)
    assert np.linalg.norm(got - ref, 2) <= 1e-10 * np.linalg.norm(ref, 2)


def test_partition_validation():
    with pytest.raises(InvalidArgumentError):
        PartitionedOperator([[0, 1], [2, 0]], (0,))
    with pytest.raises(InvalidArgumentError):
        PartitionedOperator(np.eye(3), (0, 0))
    with pytest.raises(InvalidArgumentError):
        PartitionedOperator(np.eye(3), (5,))
    p = PartitionedOperator(np.eye(3), (2, 0))
    assert p.omega1 == (0, 2) and p.omega2 == (1,)


def test_singular_complement_and_reduced():
    p = PartitionedOperator([[1.0, 1.0], [1.0, 0.0]], (0,))
    with pytest.raises(PreconditionError):
        schur_reduce(p, [0.0])
    p = PartitionedOperator([[1.0, 1.0], [1.0, 1.0]], (0,))
    # A = 1 - 1 = 0, so D_V + A is singular at V = 0
    with pytest.raises(NearSingularError):
        schur_reduce(p, [0.0])


def test_clopper_pearson_edges():
    lo, hi = clopper_pearson(np.array([0, 5, 10]), 10)
    assert lo[0] == 0 and hi[-1] == 1
    assert 0 < lo[1] < 0.5 < hi[1] < 1


def test_wegner_slope_and_constant(probe_op):
    est = wegner_probe(probe_op, UNIFORM01, [10, 30, 100, 300, 1000], 20000, seed=11)
    assert -1.2 <= est.slope <= -0.8
    assert np.all(est.raw_prob * est.grid <= 10 * 4 * UNIFORM01.density_bound)
    assert np.all(np.diff(est.tail_prob) <= 0)
    assert np.all((est.ci_low <= est.raw_prob) & (est.raw_prob <= est.ci_high))


def test_wegner_huge_lambda(probe_op):
    est = wegner_probe(probe_op, UNIFORM01, [1e8], 10000, seed=2)
    assert est.counts[0] == 0


def test_wegner_reproducible(probe_op):
    a = wegner_probe(probe_op, UNIFORM01, [10, 100], 500, seed=3)
    b = wegner_probe(probe_op, UNIFORM01, [10, 100], 500, seed=3, threads=4)
    assert np.array_equal(a.counts, b.counts)


def test_probes_reject_bernoulli_and_few_trials(probe_op):
    with pytest.raises(UnsupportedDisorderError):
        wegner_probe(probe_op, DisorderSpec.bernoulli(0.5, 0, 1), [10], 1000, 0)
    with pytest.raises(UnsupportedDisorderError):
        eigen_distance_probe(probe_op, DisorderSpec.bernoulli(0.5, 0, 1), [0.1], 1000, 0)
    with pytest.raises(InvalidArgumentError):
        wegner_probe(probe_op, UNIFORM01, [10], 50, 0)


def test_eigen_distance(probe_op):
    kappas = [0, 0.001, 0.003, 0.01, 0.03, 0.1]
    est = eigen_distance_probe(probe_op, UNIFORM01, kappas, 20000, seed=1)
    assert est.counts[0] == 0
    assert np.all(np.diff(est.raw_prob) >= 0)
    assert 0 < est.slope <= 2 * 4 * UNIFORM01.density_bound
