import io
import math

import numpy as np
import pytest

import oracles
from wexch.core import Dist, RandomSource
from wexch.errors import WexchError
from wexch.sampler import (
    MixtureSpec,
    coordinate_probs,
    draw_component,
    dumps_sample_run,
    example1_indices,
    example1_joint,
    example1_sample,
    example1_sample_batch,
    exact_joint_mixture,
    exact_joint_weighted_iid,
    read_sample_run,
    sample_mixture,
    sample_weighted_iid,
    sample_weighted_iid_batch,
    spec_hash,
    write_sample_run,
)
from wexch.weights import BoundedRatio, CyclicPartition

P3 = Dist.normalize([0.2, 0.3, 0.5])


@pytest.mark.parametrize("lam", [CyclicPartition(), BoundedRatio(((1.0, 0.5, 2.0), (2.0, 1.0, 0.5)))],
                         ids=lambda f: f.name)
def test_exact_joint_matches_oracle(lam):
    rows = np.exp(lam.first(4)).tolist()
    want = oracles.weighted_iid_joint(P3.probs.tolist(), rows, 4)
    Q = exact_joint_weighted_iid(P3, lam, 4)
    for x, q in want.items():
        assert Q.prob(x) == pytest.approx(q, abs=1e-15)


def test_example1_joint_matches_oracle():
    for n in range(1, 9):
        want = oracles.single_one_joint(n)
        Q = example1_joint(n)
        for x, q in want.items():
            assert Q.prob(x) == q


def test_exact_mixture_is_weighted_sum():
    lam = CyclicPartition()
    A, B = Dist.normalize([0.6, 0.3, 0.1]), Dist.normalize([0.1, 0.3, 0.6])
    Q = exact_joint_mixture(MixtureSpec((A, B), (0.25, 0.75)), lam, 3)
    want = 0.25 * exact_joint_weighted_iid(A, lam, 3).table + 0.75 * exact_joint_weighted_iid(B, lam, 3).table
    np.testing.assert_allclose(Q.table, want, atol=1e-15)


def test_sample_frequencies_match_coordinate_probs():
    lam = BoundedRatio(((1.0, 0.5, 2.0), (2.0, 1.0, 0.5)))
    reps, n = 20_000, 4
    x = sample_weighted_iid_batch(P3, lam, n, reps, RandomSource(3))
    probs = coordinate_probs(P3, lam, n)
    for i in range(n):
        freq = np.bincount(x[:, i], minlength=3) / reps
        sd = np.sqrt(probs[i] * (1 - probs[i]) / reps)
        assert np.all(np.abs(freq - probs[i]) <= 4 * sd)


def test_coordinate_draws_are_prefix_stable():
    lam = CyclicPartition()
    a = sample_weighted_iid(P3, lam, 50, RandomSource(9)).symbols
    b = sample_weighted_iid(P3, lam, 20, RandomSource(9)).symbols
    assert a[:20].tolist() == b.tolist()


def test_mixture_component_frequency():
    mu = MixtureSpec((P3, Dist.normalize([0.5, 0.5, 0.0])), (0.3, 0.7))
    draws = [draw_component(mu, RandomSource(s)) for s in range(4000)]
    f = np.mean(draws)
    assert abs(f - 0.7) <= 4 * math.sqrt(0.21 / 4000)
    run = sample_mixture(mu, CyclicPartition(), 30, RandomSource(1))
    assert run.drawn_component in (0, 1) and run.n == 30


def test_mixture_spec_validation():
    with pytest.raises(WexchError):
        MixtureSpec((P3,), (0.5,))
    with pytest.raises(WexchError):
        MixtureSpec((P3, Dist.normalize([1, 1])), (0.5, 0.5))


def test_example1_index_law():
    idx = example1_indices(200_000, RandomSource(0))
    for i in range(1, 6):
        f = np.mean(idx == i)
        assert abs(f - 2.0**-i) <= 4 * math.sqrt(2.0**-i / 200_000)
    assert idx.min() >= 1


def test_example1_sample_has_at_most_one_one():
    x = example1_sample_batch(20, 10_000, RandomSource(4))
    assert x.sum(axis=1).max() <= 1
    assert example1_sample(5, RandomSource(4)).symbols.sum() <= 1


def test_serialisation_round_trip():
    run = sample_weighted_iid(P3, CyclicPartition(), 25, RandomSource(2))
    spec = {"family": "cyclic_partition"}
    buf = io.StringIO()
    write_sample_run(run, buf, spec)
    buf.seek(0)
    header, again = read_sample_run(buf)
    assert header["spec_hash"] == spec_hash(spec)
    assert again.symbols.tolist() == run.symbols.tolist()
    assert dumps_sample_run(run, spec) == buf.getvalue()


def test_seeded_runs_reproduce():
    lam = CyclicPartition()
    r1 = dumps_sample_run(sample_weighted_iid(P3, lam, 100, RandomSource(77)))
    r2 = dumps_sample_run(sample_weighted_iid(P3, lam, 100, RandomSource(77)))
    assert r1 == r2
