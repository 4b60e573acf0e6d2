"""Finite-alphabet probability primitives.

Masses are held in log space (``-inf`` marks an exact zero) so that weights
such as ``exp(-i)`` or ``2**-i`` at large ``i`` never underflow before they are
normalised.  Everything here is an immutable value.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AlphabetMismatch,
    BadIndex,
    NonPositiveWeight,
    NotNormalized,
    TooLarge,
    WexchError,
    ZeroMass,
)

DIST_TOL = 1e-12
JOINT_TOL = 1e-10
MAX_JOINT_ENTRIES = 2**24


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.size < 1:
            raise WexchError("alphabet needs at least one symbol")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(k) for k in range(self.size)))
        if len(self.labels) != self.size or len(set(self.labels)) != self.size:
            raise WexchError("labels must be distinct and match the alphabet size")

    def __len__(self):
        return self.size


@dataclass(frozen=True, eq=False)
class Measure:
    """Finite nonnegative measure, stored as log masses."""

    logmass: np.ndarray

    def __post_init__(self):
        lm = np.asarray(self.logmass, dtype=float)
        if lm.ndim != 1 or lm.size == 0:
            raise WexchError("measure must be a nonempty vector")
        if np.any(np.isnan(lm)) or np.any(lm == np.inf):
            raise WexchError("measure masses must be finite")
        object.__setattr__(self, "logmass", _frozen(lm))

    @classmethod
    def from_mass(cls, mass: Sequence[float]) -> "Measure":
        m = np.asarray(mass, dtype=float)
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise WexchError("masses must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            return cls(np.log(m))

    @property
    def K(self) -> int:
        return self.logmass.size

    @property
    def is_zero(self) -> np.ndarray:
        """Explicit zero flag per entry."""
        return np.isneginf(self.logmass)

    @property
    def mass(self) -> np.ndarray:
        return np.exp(self.logmass)

    def log_total(self) -> float:
        return float(logsumexp(self.logmass))

    def normalize(self) -> "Dist":
        if np.all(self.is_zero):
            raise ZeroMass("measure has zero total mass")
        return Dist._trusted(np.exp(self.logmass - self.log_total()))

    def scaled(self, c: float) -> "Measure":
        if c <= 0:
            raise WexchError("scale must be positive")
        return Measure(self.logmass + math.log(c))


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability vector on ``{0, ..., K-1}``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise WexchError("distribution must be a nonempty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise NotNormalized("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > DIST_TOL:
            raise NotNormalized(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p))

    @classmethod
    def _trusted(cls, p: np.ndarray) -> "Dist":
        # renormalise away the last ulp so construction never trips the check
        p = np.asarray(p, dtype=float)
        return cls(p / p.sum())

    @classmethod
    def normalize(cls, weights: Sequence[float]) -> "Dist":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise WexchError("weights must be finite and nonnegative")
        if w.sum() <= 0:
            raise ZeroMass("cannot normalise zero mass")
        return cls._trusted(w)

    @classmethod
    def point(cls, K: int, x: int) -> "Dist":
        p = np.zeros(K)
        p[x] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, K: int) -> "Dist":
        return cls(np.full(K, 1.0 / K))

    @property
    def K(self) -> int:
        return self.probs.size

    def to_measure(self) -> Measure:
        return Measure.from_mass(self.probs)

    def to_json(self) -> str:
        return json.dumps([float(v) for v in self.probs])

    @classmethod
    def from_json(cls, s: str) -> "Dist":
        return cls(np.asarray(json.loads(s), dtype=float))

    def __repr__(self):
        return f"Dist({np.array2string(self.probs, precision=6)})"


def as_measure(P) -> Measure:
    if isinstance(P, Measure):
        return P
    if isinstance(P, Dist):
        return P.to_measure()
    return Measure.from_mass(P)


def log_weights_of(w) -> np.ndarray:
    """Log values of a weight function given as a WeightFn or linear array."""
    if hasattr(w, "log_values"):
        return np.asarray(w.log_values, dtype=float)
    arr = np.asarray(w, dtype=float)
    if np.any(~(arr > 0)) or not np.all(np.isfinite(arr)):
        raise NonPositiveWeight("weight functions must be strictly positive and finite")
    return np.log(arr)


def reweight(P, w) -> Dist:
    """Return ``P o w``: the distribution proportional to ``w(x) P(x)``."""
    P = as_measure(P)
    lw = log_weights_of(w)
    if lw.shape != P.logmass.shape:
        raise AlphabetMismatch("weight function and measure have different sizes")
    if np.all(P.is_zero):
        raise ZeroMass("sum of w(x) P(x) is zero")
    a = P.logmass + lw
    return Dist._trusted(np.exp(a - logsumexp(a)))


def reweight_log_table(P, log_w_table: np.ndarray) -> np.ndarray:
    """Row-wise ``P o w_i`` for a table of log weights; returns an (n, K) array."""
    P = as_measure(P)
    a = P.logmass[None, :] + np.asarray(log_w_table, dtype=float)
    if np.all(P.is_zero):
        raise ZeroMass("sum of w(x) P(x) is zero")
    probs = np.exp(a - logsumexp(a, axis=1, keepdims=True))
    return probs / probs.sum(axis=1, keepdims=True)


def total_variation(P: Dist, R: Dist) -> float:
    p, r = _probs(P), _probs(R)
    if p.shape != r.shape:
        raise AlphabetMismatch("distributions live on different alphabets")
    return 0.5 * float(np.abs(p - r).sum())


def _probs(P) -> np.ndarray:
    if isinstance(P, Dist):
        return P.probs
    return np.asarray(P, dtype=float)


@dataclass(frozen=True, eq=False)
class JointDist:
    """Exact joint distribution of a length-``n`` prefix, shape ``(K,)*n``."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim < 1:
            raise WexchError("joint table needs at least one axis")
        K = t.shape[0]
        if any(s != K for s in t.shape):
            raise AlphabetMismatch("all axes of a joint table must have size K")
        check_joint_size(K, t.ndim)
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise NotNormalized("joint entries must be finite and nonnegative")
        if abs(t.sum() - 1.0) > JOINT_TOL:
            raise NotNormalized(f"joint table sums to {t.sum()!r}")
        object.__setattr__(self, "table", _frozen(t))

    @classmethod
    def normalize(cls, table) -> "JointDist":
        t = np.asarray(table, dtype=float)
        s = t.sum()
        if s <= 0:
            raise ZeroMass("joint table has zero mass")
        return cls(t / s)

    @property
    def n(self) -> int:
        return self.table.ndim

    @property
    def K(self) -> int:
        return self.table.shape[0]

    def prob(self, x: Sequence[int]) -> float:
        return float(self.table[tuple(x)])

    def mix(self, other: "JointDist", alpha: float) -> "JointDist":
        return JointDist.normalize(alpha * self.table + (1 - alpha) * other.table)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "K": self.K,
                           "table": [float(v) for v in self.table.ravel()]})

    @classmethod
    def from_json(cls, s: str) -> "JointDist":
        d = json.loads(s)
        return cls(np.asarray(d["table"], dtype=float).reshape((d["K"],) * d["n"]))


def check_joint_size(K: int, n: int) -> None:
    if n * math.log2(max(K, 1)) > 24 + 1e-12:
        raise TooLarge(f"K^n = {K}^{n} exceeds the enumeration cap of 2^24 entries")


def marginalize(Q: JointDist, m: int) -> JointDist:
    """Marginal of the first ``m`` coordinates."""
    if not 1 <= m <= Q.n:
        raise BadIndex(f"m={m} outside 1..{Q.n}")
    if m == Q.n:
        return Q
    t = Q.table.sum(axis=tuple(range(m, Q.n)))
    return JointDist(t / t.sum())


def coordinate_marginal(Q: JointDist, i: int) -> Dist:
    """Law of coordinate ``i`` (1-based)."""
    if not 1 <= i <= Q.n:
        raise BadIndex(f"i={i} outside 1..{Q.n}")
    axes = tuple(a for a in range(Q.n) if a != i - 1)
    return Dist._trusted(Q.table.sum(axis=axes))


@dataclass(frozen=True)
class EventSpec:
    """A count event on the symbol ``symbol``; symmetric in the prefix order.

    ``kind`` is ``"count_equals"`` or ``"count_at_least"``.  On an infinite
    sequence the event refers to the total count; on a finite prefix it is
    evaluated on that prefix, so the value on a length-``N`` prefix differs
    from the infinite-sequence event only if ``symbol`` occurs after ``N``.
    """

    kind: str
    symbol: int
    count: int

    def __post_init__(self):
        if self.kind not in ("count_equals", "count_at_least"):
            raise WexchError(f"unknown event kind {self.kind!r}")
        if self.count < 0:
            raise WexchError("count must be nonnegative")

    def evaluate(self, prefix: Sequence[int]) -> bool:
        c = int(np.count_nonzero(np.asarray(prefix) == self.symbol))
        return c == self.count if self.kind == "count_equals" else c >= self.count

    def evaluate_batch(self, prefixes: np.ndarray) -> np.ndarray:
        c = np.count_nonzero(np.asarray(prefixes) == self.symbol, axis=-1)
        return c == self.count if self.kind == "count_equals" else c >= self.count

    def to_dict(self) -> dict:
        return {"kind": self.kind, "symbol": self.symbol, "count": self.count}


@dataclass(frozen=True)
class RandomSource:
    """Counter-based randomness: ``(seed, stream)`` pins the draws exactly.

    Streams are Philox generators keyed by ``SeedSequence(seed, spawn_key=(stream,))``.
    Draw ``k`` of a stream is the ``k``-th output, so a stream doubles as a
    counter-addressed sequence of uniforms.
    """

    seed: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise WexchError("seed must be a 64-bit unsigned integer")

    def generator(self, stream: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(stream),))
        return np.random.Generator(np.random.Philox(ss))

    def uniforms(self, stream: int, size) -> np.ndarray:
        return self.generator(stream).random(size)

    def uint64(self, stream: int, size) -> np.ndarray:
        return self.generator(stream).integers(0, 2**64, size=size, dtype=np.uint64,
                                               endpoint=False)
