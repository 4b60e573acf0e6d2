"""Samplers and exact small-n joints for weighted i.i.d. laws and their mixtures.

Seed-path convention: the mixture component is drawn from stream 0 of the
:class:`RandomSource`; coordinate ``i`` uses draw ``i`` of stream 1 (batched
draws consume stream 1 row-major).  The geometric index of the single-one
law also uses stream 0.
"""
from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .core import (
    JointDist,
    RandomSource,
    as_measure,
    check_joint_size,
    reweight_log_table,
)
from .errors import WexchError
from .weights import WeightSeq

COMPONENT_STREAM = 0
COORD_STREAM = 1


@dataclass(frozen=True)
class MixtureSpec:
    """Finitely supported mixing distribution over base measures."""

    components: tuple
    probs: tuple

    def __post_init__(self):
        comps = tuple(as_measure(P) for P in self.components)
        probs = tuple(float(p) for p in self.probs)
        if len(comps) != len(probs) or not comps:
            raise WexchError("need one probability per component")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise WexchError("component probabilities must sum to 1")
        if len({P.K for P in comps}) != 1:
            raise WexchError("components must share an alphabet")
        for P in comps:
            P.normalize()
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def single(cls, P) -> "MixtureSpec":
        return cls((P,), (1.0,))

    @property
    def K(self) -> int:
        return self.components[0].K


@dataclass(frozen=True, eq=False)
class SampleRun:
    symbols: np.ndarray
    drawn_component: int | None
    seed: int

    @property
    def n(self) -> int:
        return int(self.symbols.size)


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs, axis=-1)
    x = (cdf < u[..., None]).sum(axis=-1)
    return np.minimum(x, probs.shape[-1] - 1)


def coordinate_probs(P, lam: WeightSeq, n: int) -> np.ndarray:
    """``(n, K)`` table whose row ``i`` is ``P o lambda_i``."""
    return reweight_log_table(P, lam.first(n))


def sample_weighted_iid(P, lam: WeightSeq, n: int, rng: RandomSource) -> SampleRun:
    if n < 1:
        raise WexchError("n must be positive")
    probs = coordinate_probs(P, lam, n)
    x = _inverse_cdf(probs, rng.uniforms(COORD_STREAM, n))
    return SampleRun(x.astype(np.int64), None, rng.seed)


def sample_weighted_iid_batch(P, lam: WeightSeq, n: int, reps: int, rng: RandomSource,
                              probs: np.ndarray | None = None) -> np.ndarray:
    """``reps`` independent length-``n`` sequences, shape ``(reps, n)``."""
    if probs is None:
        probs = coordinate_probs(P, lam, n)
    u = rng.uniforms(COORD_STREAM, (reps, n))
    return _inverse_cdf(probs[None, :, :], u).astype(np.int64)


def draw_component(mu: MixtureSpec, rng: RandomSource) -> int:
    u = rng.uniforms(COMPONENT_STREAM, 1)
    return int(_inverse_cdf(np.asarray(mu.probs), u)[0])


def sample_mixture(mu: MixtureSpec, lam: WeightSeq, n: int, rng: RandomSource) -> SampleRun:
    c = draw_component(mu, rng)
    run = sample_weighted_iid(mu.components[c], lam, n, rng)
    return SampleRun(run.symbols, c, rng.seed)


def exact_joint_weighted_iid(P, lam: WeightSeq, n: int) -> JointDist:
    P = as_measure(P)
    check_joint_size(P.K, n)
    rows = coordinate_probs(P, lam, n)
    t = rows[0]
    for k in range(1, n):
        t = np.multiply.outer(t, rows[k])
    return JointDist.normalize(t)


def exact_joint_mixture(mu: MixtureSpec, lam: WeightSeq, n: int) -> JointDist:
    t = sum(p * exact_joint_weighted_iid(P, lam, n).table
            for P, p in zip(mu.components, mu.probs))
    return JointDist.normalize(t)


# --- the single-one counterexample ---------------------------------------

def example1_joint(n: int) -> JointDist:
    """Prefix law of ``Q(e_i) = 2**-i``: a single 1 at position ``i``."""
    check_joint_size(2, n)
    t = np.zeros((2,) * n)
    for i in range(1, n + 1):
        idx = [0] * n
        idx[i - 1] = 1
        t[tuple(idx)] = 2.0**-i
    t[(0,) * n] = 2.0**-n
    return JointDist(t)


def _bit_length_u64(u: np.ndarray) -> np.ndarray:
    hi = (u >> np.uint64(32)).astype(np.float64)
    lo = (u & np.uint64(0xFFFFFFFF)).astype(np.float64)
    bl_hi = np.frexp(hi)[1]
    bl_lo = np.frexp(lo)[1]
    return np.where(hi > 0, bl_hi + 32, bl_lo)


def example1_indices(reps: int, rng: RandomSource) -> np.ndarray:
    """Geometric ``I`` with ``P(I = i) = 2**-i``: position of the first set bit."""
    out = np.empty(reps, dtype=np.int64)
    filled = 0
    gen = rng.generator(COMPONENT_STREAM)
    while filled < reps:
        u = gen.integers(0, 2**64, size=reps - filled, dtype=np.uint64)
        u = u[u != 0]
        out[filled:filled + u.size] = 65 - _bit_length_u64(u)
        filled += u.size
    return out


def example1_sample(n: int, rng: RandomSource) -> SampleRun:
    x = example1_sample_batch(n, 1, rng)[0]
    return SampleRun(x, None, rng.seed)


def example1_sample_batch(n: int, reps: int, rng: RandomSource) -> np.ndarray:
    idx = example1_indices(reps, rng)
    x = np.zeros((reps, n), dtype=np.int64)
    hit = idx <= n
    x[np.flatnonzero(hit), idx[hit] - 1] = 1
    return x


# --- serialisation -------------------------------------------------------

def spec_hash(spec: dict) -> str:
    blob = json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_sample_run(run: SampleRun, out: TextIO, spec: dict | None = None) -> None:
    header = {"seed": int(run.seed), "spec_hash": spec_hash(spec or {}), "n": run.n,
              "drawn_component": run.drawn_component}
    out.write(json.dumps(header, sort_keys=True) + "\n")
    out.write("".join(f"{int(s)}\n" for s in run.symbols))


def read_sample_run(inp: TextIO) -> tuple[dict, SampleRun]:
    header = json.loads(inp.readline())
    syms = np.array([int(line) for line in inp if line.strip()], dtype=np.int64)
    if syms.size != header["n"]:
        raise WexchError("symbol count does not match header")
    return header, SampleRun(syms, header["drawn_component"], header["seed"])


def dumps_sample_run(run: SampleRun, spec: dict | None = None) -> str:
    buf = io.StringIO()
    write_sample_run(run, buf, spec)
    return buf.getvalue()
