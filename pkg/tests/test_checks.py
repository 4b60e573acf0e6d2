import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from wexch.checks import (
    all_pairs_swap_check,
    conditional_law_check,
    factor_as_weighted_iid,
    is_exchangeable,
    is_weighted_exchangeable,
    perturb,
    random_weighted_exchangeable,
    weighted_bar,
    weighted_swap_check,
)
from wexch.core import Dist, JointDist
from wexch.errors import BadIndex
from wexch.sampler import MixtureSpec, example1_joint, exact_joint_mixture, exact_joint_weighted_iid
from wexch.weights import BinaryExample, BoundedRatio, Constant, CyclicPartition

BR = BoundedRatio(((1.0, 0.5, 2.0), (2.0, 1.0, 0.5), (0.5, 2.0, 1.0)))
P3 = Dist.normalize([0.2, 0.3, 0.5])


def test_iid_is_exchangeable():
    Q = exact_joint_weighted_iid(P3, Constant((1.0, 1.0, 1.0)), 4)
    assert is_exchangeable(Q).passed


def test_weighted_iid_is_weighted_exchangeable_but_not_exchangeable():
    Q = exact_joint_weighted_iid(P3, CyclicPartition(), 4)
    assert is_weighted_exchangeable(Q, CyclicPartition()).passed
    r = is_exchangeable(Q)
    assert not r.passed and r.witness is not None


def test_mixture_passes_all_checks():
    mu = MixtureSpec((P3, Dist.normalize([0.6, 0.3, 0.1])), (0.4, 0.6))
    Q = exact_joint_mixture(mu, BR, 4)
    assert is_weighted_exchangeable(Q, BR).passed
    assert all_pairs_swap_check(Q, BR).passed
    assert not factor_as_weighted_iid(Q, BR).found


@pytest.mark.parametrize("n", range(1, 11))
def test_single_one_joint_is_weighted_exchangeable(n):
    Q = example1_joint(n)
    r = is_weighted_exchangeable(Q, BinaryExample(), tol=1e-12)
    assert r.passed and r.max_violation <= 1e-12


def test_single_one_joint_bar_is_symmetric_oracle():
    n = 5
    joint = oracles.single_one_joint(n)
    bar = {x: q / np.prod([2.0 ** -(i + 1) if x[i] else 1.0 for i in range(n)]) for x, q in joint.items()}
    for x in bar:
        for s in itertools.permutations(range(n)):
            y = tuple(x[k] for k in s)
            assert bar[x] == pytest.approx(bar[y], rel=1e-12)
    got = weighted_bar(example1_joint(n), BinaryExample())
    z = sum(bar.values())
    for x, v in bar.items():
        assert got[x] == pytest.approx(v / z, rel=1e-12)


def test_single_one_joint_has_no_factorisation():
    for n in range(2, 9):
        assert not factor_as_weighted_iid(example1_joint(n), BinaryExample()).found


def test_factorisation_recovers_base():
    Q = exact_joint_weighted_iid(P3, CyclicPartition(), 4)
    f = factor_as_weighted_iid(Q, CyclicPartition())
    np.testing.assert_allclose(f.base.probs, P3.probs, atol=1e-12)


def test_swap_check_detects_perturbation(rng):
    Q = random_weighted_exchangeable(3, 4, BR, rng)
    assert all_pairs_swap_check(Q, BR).passed
    bad = perturb(Q, rng, 0.05)
    r = weighted_swap_check(bad, BR, 1, 2)
    assert not r.passed and r.witness["pair"] == [1, 2]
    assert not is_weighted_exchangeable(bad, BR).passed


def test_swap_check_index_errors():
    Q = example1_joint(3)
    with pytest.raises(BadIndex):
        weighted_swap_check(Q, BinaryExample(), 2, 2)
    with pytest.raises(BadIndex):
        weighted_swap_check(Q, BinaryExample(), 1, 4)
    with pytest.raises(BadIndex):
        conditional_law_check(Q, BinaryExample(), 3, 2)


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_random_fixture_is_weighted_exchangeable(n, seed):
    Q = random_weighted_exchangeable(3, n, BR, np.random.default_rng(seed), sparsity=0.3)
    assert is_weighted_exchangeable(Q, BR).passed
    assert all_pairs_swap_check(Q, BR).passed


def test_conditional_law_matches_oracle():
    lam = CyclicPartition()
    n = 4
    rows = np.exp(lam.first(n)).tolist()
    joint = oracles.weighted_iid_joint(P3.probs.tolist(), rows, n)
    Q = exact_joint_weighted_iid(P3, lam, n)
    for m in range(1, n + 1):
        for i in range(1, m + 1):
            assert conditional_law_check(Q, lam, i, m).passed
            # spot check one atom against brute-force conditioning and brute-force weights
            first, rest = (0, 1, 2, 2)[:m], (2, 2, 1, 0)[m:]
            law = oracles.conditional_law(joint, i, m, sorted(first), rest, 3)
            w = oracles.conditional_weights(rows[:m], list(first), i)
            agg = [sum(wj for wj, xj in zip(w, first) if xj == s) for s in range(3)]
            np.testing.assert_allclose(law, agg, atol=1e-12)


@pytest.mark.parametrize("n", range(1, 7))
def test_conditional_law_on_single_one_joint(n):
    Q = example1_joint(n)
    for m in range(1, n + 1):
        for i in range(1, m + 1):
            assert conditional_law_check(Q, BinaryExample(), i, m).passed


def test_conditional_law_detects_wrong_weights():
    Q = exact_joint_weighted_iid(P3, CyclicPartition(), 3)
    r = conditional_law_check(Q, BR, 1, 3)
    assert not r.passed and r.witness is not None


def test_report_json_has_verdict():
    r = is_exchangeable(JointDist(np.full((2, 2), 0.25)))
    assert '"verdict": "pass"' in r.to_json()
