import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_spd
from oracles import exhaustive_assignment
from sticc.assigner import (
    assign, assignment_terms, min_cost_labels, node_cost_matrix, sparsity_term, total_objective,
)
from sticc.dataset import GeoDataset, build_subregions, subregions_from_pointers
from sticc.model import ClusterModel, ToeplitzPrecision


def chain_pointers(N):
    # n -> n-1, and the head points forward
    return np.array([1] + list(range(N - 1)))


def _models(rng, K, dim):
    return [ClusterModel.build(rng.normal(scale=3, size=dim), ToeplitzPrecision(random_spd(rng, dim)[None]))
            for _ in range(K)]


def test_beta_zero_separated_blobs(rng):
    X = np.vstack([rng.normal(-5, 1, size=(20, 1)), rng.normal(5, 1, size=(20, 1))])
    models = [ClusterModel.build([-5.0], ToeplitzPrecision(np.ones((1, 1, 1)))),
              ClusterModel.build([5.0], ToeplitzPrecision(np.ones((1, 1, 1))))]
    subs = subregions_from_pointers(X, np.roll(np.arange(40), 1))
    a = assign(subs, models, 0.0)
    np.testing.assert_array_equal(a.labels, [0] * 20 + [1] * 20)


def test_huge_beta_single_label(rng):
    ds = GeoDataset(np.arange(40), rng.uniform(size=(40, 2)), rng.normal(size=(40, 2)))
    subs = build_subregions(ds, 2)
    models = _models(rng, 3, 4)
    a = assign(subs, models, 1e6)
    assert len(np.unique(a.labels)) == 1
    assert a.objective_penalty == 0


def test_chain_n6_k2_beta1():
    costs = np.array([[0, 2], [1, 0], [0, 1.5], [2, 0], [0.2, 0], [0, 3.0]])
    nearest = chain_pointers(6)
    subs = subregions_from_pointers(np.zeros((6, 1)), nearest)
    a = assign(subs, [], 1.0, costs=costs)
    best, _ = exhaustive_assignment(costs, nearest, 1.0)
    assert a.objective == pytest.approx(best, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 9), st.integers(2, 3), st.sampled_from([0.5, 1.0, 3.0]), st.integers(0, 2 ** 31))
def test_exact_on_random_pointer_graphs(N, K, beta, seed):
    """Any functional graph (arbitrary cycles), not just chains."""
    r = np.random.default_rng(seed)
    nearest = np.array([r.choice([j for j in range(N) if j != i]) for i in range(N)])
    costs = r.uniform(0, 4, size=(N, K))
    labels = min_cost_labels(costs, nearest, beta)
    lik, pen = assignment_terms(costs, labels, nearest, beta)
    best, _ = exhaustive_assignment(costs, nearest, beta)
    assert lik + pen == pytest.approx(best, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(1, 4), st.integers(0, 2 ** 31))
def test_beta_zero_is_argmin(N, K, seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(N, 2))
    models = _models(r, K, 2)
    subs = subregions_from_pointers(X, np.roll(np.arange(N), 1))
    a = assign(subs, models, 0.0)
    np.testing.assert_array_equal(a.labels, np.argmin(node_cost_matrix(X, models), axis=1))


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 30), st.integers(2, 4), st.integers(0, 2 ** 31))
def test_penalty_monotone_in_beta(N, K, seed):
    r = np.random.default_rng(seed)
    ds = GeoDataset(np.arange(N), r.uniform(size=(N, 2)), r.normal(size=(N, 2)))
    subs = build_subregions(ds, 1)
    models = _models(r, K, 2)
    lo = assign(subs, models, 0.0).labels
    hi = assign(subs, models, 1e6).labels
    dis = lambda lab: int(np.sum(lab != lab[subs.nearest_subregion]))
    assert dis(hi) <= dis(lo)


def test_penalty_counts_disagreements(rng):
    costs = rng.uniform(size=(5, 2))
    nearest = np.array([1, 0, 1, 2, 3])
    labels = np.array([0, 1, 1, 0, 0])
    lik, pen = assignment_terms(costs, labels, nearest, 2.5)
    assert pen == 2.5 * 3
    assert lik == pytest.approx(costs[np.arange(5), labels].sum())


def test_worse_previous_labels_are_replaced():
    costs = np.array([[0.0, 1.0], [1.0, 0.0]])
    subs = subregions_from_pointers(np.zeros((2, 1)), [1, 0])
    # the optimum at beta=0.4 splits the pair (cost 0 + 0.8); a worse previous is dropped
    a = assign(subs, [], 0.4, previous=np.array([1, 0]), costs=costs)
    np.testing.assert_array_equal(a.labels, [0, 1])
    assert a.objective == pytest.approx(0.8)


def test_objective_trivial_cases(rng):
    X = rng.normal(size=(6, 2))
    models = _models(rng, 2, 2)
    subs = subregions_from_pointers(X, [1, 0, 1, 2, 3, 4])
    labels = np.array([0, 1, 0, 1, 0, 1])
    plain = node_cost_matrix(X, models)[np.arange(6), labels].sum()
    assert total_objective(subs, models, labels, 0.0, 0.0) == pytest.approx(plain)
    same = np.zeros(6, dtype=int)
    _, pen = assignment_terms(node_cost_matrix(X, models), same, subs.nearest_subregion, 5.0)
    assert pen == 0


def test_objective_term_by_term():
    """K=2, N=4 with hand-built precisions, evaluated one scalar at a time."""
    X = np.array([[0.0], [1.0], [3.0], [-1.0]])
    m0 = ClusterModel.build([0.0], ToeplitzPrecision(np.array([[[1.0]]])))
    m1 = ClusterModel.build([2.0], ToeplitzPrecision(np.array([[[4.0]]])))
    subs = subregions_from_pointers(X, [1, 0, 1, 0])
    labels = np.array([0, 1, 1, 0])
    beta, lam = 2.0, 0.3

    def nll(x, mu, p):
        return 0.5 * p * (x - mu) ** 2 - 0.5 * math.log(p) + 0.5 * math.log(2 * math.pi)

    expected = nll(0, 0, 1) + nll(1, 2, 4) + nll(3, 2, 4) + nll(-1, 0, 1)
    expected += beta * 2   # points 0 and 1 disagree with their pointers
    assert total_objective(subs, [m0, m1], labels, beta, lam) == pytest.approx(expected, abs=1e-12)


def test_sparsity_term_counts_off_diagonal():
    blocks = np.stack([np.array([[2.0, -0.5], [-0.5, 2.0]]), np.array([[0.1, 0.2], [0.0, 0.0]])])
    m = ClusterModel.build(np.zeros(4), ToeplitzPrecision(blocks))
    T = m.theta
    assert sparsity_term([m], 0.7) == pytest.approx(0.7 * (np.abs(T).sum() - np.abs(np.diag(T)).sum()))


def test_cost_matrix_errors(rng):
    with pytest.raises(ValueError):
        node_cost_matrix(rng.normal(size=(3, 2)), [])
    with pytest.raises(ValueError):
        node_cost_matrix(rng.normal(size=(3, 3)), _models(rng, 2, 2))
    with pytest.raises(ValueError):
        assign(subregions_from_pointers(np.zeros((2, 1)), [1, 0]), [], -1.0, costs=np.zeros((2, 2)))
