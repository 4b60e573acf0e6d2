import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from wexch.errors import NonPositiveWeight, WexchError, WrongAlphabet
from wexch.weights import (
    BinaryExample,
    BoundedRatio,
    Constant,
    Custom,
    CyclicPartition,
    GeometricTilt,
    PowerTilt,
    Verdict,
    WeightFn,
    from_config,
    make_series,
    partial_sums,
    ratio_term,
    tail_classify,
)

FAMILIES = [
    Constant((1.0, 2.0, 3.0)),
    BinaryExample(),
    GeometricTilt((1.0, 2.0), (0.1, 0.3)),
    PowerTilt((1.0, 1.0, 1.0), (0.0, 0.5, 2.0)),
    CyclicPartition(),
    BoundedRatio(((1.0, 0.5), (2.0, 1.0))),
    Custom(((1.0, 2.0, 3.0), (3.0, 2.0, 1.0)), "periodic"),
]


@pytest.mark.parametrize("lam", FAMILIES, ids=lambda f: f.name)
def test_config_round_trip(lam):
    again = from_config(lam.to_config())
    np.testing.assert_array_equal(again.first(50), lam.first(50))


def test_binary_example_values():
    lam = BinaryExample()
    for i in (1, 2, 7, 30):
        assert lam.term_at(i).values.tolist() == pytest.approx([1.0, 2.0**-i], rel=1e-14)


def test_cyclic_partition_values():
    lam = CyclicPartition()
    for i in range(1, 10):
        v = lam.term_at(i).values
        penalised = [x for x in range(3) if (x + 1) % 3 == i % 3]
        for x in range(3):
            expect = math.exp(-i) if x in penalised else 1.0
            assert v[x] == pytest.approx(expect, rel=1e-14)
    assert CyclicPartition().term_at(4).values == pytest.approx([math.exp(-4), 1, 1])


def test_power_and_geometric_values():
    lam = PowerTilt((2.0, 1.0), (1.0, 0.5))
    assert lam.term_at(4).values == pytest.approx([0.5, 0.5])
    g = GeometricTilt((1.0, 3.0), (0.0, 1.0))
    assert g.term_at(2).values == pytest.approx([1.0, 3 * math.exp(-2)])


def test_bad_weights_rejected():
    with pytest.raises(NonPositiveWeight):
        Constant((1.0, 0.0))
    with pytest.raises(WexchError):
        from_config({"family": "nope"})
    with pytest.raises(WexchError):
        from_config({"family": "constant"})
    with pytest.raises(WexchError):
        WeightFn.from_values([1.0, -1.0])


def test_ratio_term_binary():
    for i in (1, 5, 20):
        assert ratio_term(BinaryExample(), i) == pytest.approx(2.0**-i)


def test_partial_sums_match_oracle():
    lam = BinaryExample()
    s = partial_sums(lam, make_series(lam, "sufficient"), (10, 100))
    assert s[10] == pytest.approx(oracles.series_partial_sum(lambda i: 2.0**-i, 10), rel=1e-12)
    lam = PowerTilt((1.0, 1.0), (0.0, 1.0))
    s = partial_sums(lam, make_series(lam, "sufficient"), (1000,))
    assert s[1000] == pytest.approx(oracles.series_partial_sum(lambda i: 1 / i, 1000), rel=1e-12)


@pytest.mark.parametrize("lam, rule, kwargs, verdict, tag", [
    (BinaryExample(), "binary", {}, Verdict.CONVERGES, "geometric"),
    (BinaryExample(), "sufficient", {}, Verdict.CONVERGES, "geometric"),
    (Constant((1.0, 5.0)), "sufficient", {}, Verdict.DIVERGES, "eventually-constant"),
    (BoundedRatio(((1.0, 0.5), (2.0, 1.0))), "binary", {}, Verdict.DIVERGES, "eventually-constant"),
    (PowerTilt((1.0, 1.0), (0.0, 1.0)), "sufficient", {}, Verdict.DIVERGES, "harmonic"),
    (PowerTilt((1.0, 1.0), (0.0, 2.0)), "sufficient", {}, Verdict.CONVERGES, "p-series"),
    (CyclicPartition(), "sufficient", {}, Verdict.CONVERGES, "geometric"),
    (CyclicPartition(), "edge", {"pair": (0, 1), "subset": (0, 1)}, Verdict.DIVERGES, "eventually-constant"),
    (Custom(((1.0, 2.0),)), "binary", {}, Verdict.UNKNOWN, "no-closed-form"),
])
def test_known_verdicts(lam, rule, kwargs, verdict, tag):
    tc = tail_classify(lam, rule, horizons=(100,), **kwargs)
    assert tc.verdict == verdict
    assert tc.tag.startswith(tag)


def test_binary_rule_needs_two_symbols():
    with pytest.raises(WrongAlphabet):
        tail_classify(Constant((1.0, 1.0, 1.0)), "binary")


def test_partial_sums_are_evidence_only():
    tc = tail_classify(BinaryExample(), "binary", horizons=(10, 1000))
    assert set(tc.partial_sums) == {10, 1000}
    assert tc.partial_sums[1000] == pytest.approx(1.0, abs=1e-12)


rates = st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0]), min_size=2, max_size=4)


@given(rates)
def test_geometric_sufficient_verdict_rule(r):
    # summand decays like exp(-(max r - min r) i): diverges iff all rates agree
    lam = GeometricTilt(tuple(1.0 for _ in r), tuple(r))
    tc = tail_classify(lam, "sufficient", horizons=())
    assert tc.diverges == (max(r) == min(r))


@given(st.lists(st.sampled_from([0.0, 0.5, 1.0, 1.5, 3.0]), min_size=2, max_size=4))
def test_power_sufficient_verdict_rule(e):
    # summand is i^-(max e - min e): a p-series
    lam = PowerTilt(tuple(1.0 for _ in e), tuple(e))
    tc = tail_classify(lam, "sufficient", horizons=())
    assert tc.diverges == (max(e) - min(e) <= 1)


@given(st.lists(st.floats(0.1, 10.0), min_size=3, max_size=3), st.lists(st.floats(0.1, 10.0), min_size=3, max_size=3))
def test_sufficient_verdict_ignores_reference(w, ref):
    for lam in (CyclicPartition(), Constant(tuple(w)), BoundedRatio((tuple(w), (1.0, 2.0, 3.0)))):
        a = tail_classify(lam, "sufficient", horizons=())
        b = tail_classify(lam, "sufficient", ref=WeightFn.from_values(ref), horizons=())
        assert a.verdict == b.verdict
