"""Weight sequences ``lambda_1, lambda_2, ...`` and symbolic tail verdicts.

Every built-in family (except an opaque custom table) can be written, for
indices past some start point, in the residue-periodic form

    log lambda_i(x) = c[i mod T, x] - g[i mod T, x] * i - h[i mod T, x] * log(i)

and every series this package needs to classify has summands of the form
``exp(min_{x in A} a_i(x) - max_{x in B} a_i(x))`` with ``A`` a subset of ``B``
and ``a_i = log lambda_i - log ref``.  On each residue class the summand is
then Theta(exp(-dg * i) * i**(-dh)) for explicit exponents, so divergence is
decided by the geometric / p-series comparison tests.  Partial sums are
attached as evidence only.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NonPositiveWeight, UnknownRule, WexchError

DEFAULT_HORIZONS = (10**2, 10**4, 10**6)
_EXP_TOL = 1e-12
_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class WeightFn:
    """A strictly positive function on ``{0, ..., K-1}``, held as logs."""

    log_values: np.ndarray

    def __post_init__(self):
        lv = np.array(self.log_values, dtype=float)
        if lv.ndim != 1 or not np.all(np.isfinite(lv)):
            raise NonPositiveWeight("weights must be strictly positive and finite")
        lv.setflags(write=False)
        object.__setattr__(self, "log_values", lv)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "WeightFn":
        v = np.asarray(values, dtype=float)
        if np.any(~(v > 0)):
            raise NonPositiveWeight("weights must be strictly positive")
        return cls(np.log(v))

    @classmethod
    def ones(cls, K: int) -> "WeightFn":
        return cls(np.zeros(K))

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def K(self) -> int:
        return self.log_values.size

    def scaled(self, c: float) -> "WeightFn":
        return WeightFn(self.log_values + math.log(c))

    def __mul__(self, other: "WeightFn") -> "WeightFn":
        return WeightFn(self.log_values + other.log_values)


class Verdict(str, enum.Enum):
    DIVERGES = "DivergesProven"
    CONVERGES = "ConvergesProven"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class TailClass:
    verdict: Verdict
    tag: str
    partial_sums: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)

    @property
    def diverges(self) -> bool:
        return self.verdict is Verdict.DIVERGES

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "tag": self.tag,
            "partial_sums": {str(k): v for k, v in self.partial_sums.items()},
            **({"detail": self.detail} if self.detail else {}),
        }


@dataclass(frozen=True, eq=False)
class TailStructure:
    """Residue-periodic closed form valid for ``i >= start``; residue is ``i % period``."""

    period: int
    c: np.ndarray
    g: np.ndarray
    h: np.ndarray
    start: int = 1


class WeightSeq:
    """Base class; subclasses are frozen dataclasses with hashable fields."""

    name = "abstract"

    @property
    def K(self) -> int:
        raise NotImplementedError

    def log_table(self, idx: np.ndarray) -> np.ndarray:
        """Log weights for 1-based indices ``idx``, shape ``(len(idx), K)``."""
        raise NotImplementedError

    def structure(self) -> TailStructure | None:
        return None

    def term_at(self, i: int) -> WeightFn:
        if i < 1:
            raise WexchError("indices are 1-based")
        return WeightFn(self.log_table(np.array([i]))[0])

    def first(self, n: int) -> np.ndarray:
        return self.log_table(np.arange(1, n + 1))

    def to_config(self) -> dict:
        raise NotImplementedError


def _tuple(v) -> tuple:
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class Constant(WeightSeq):
    w: tuple
    name = "constant"

    def __post_init__(self):
        object.__setattr__(self, "w", _tuple(self.w))
        if any(not v > 0 for v in self.w):
            raise NonPositiveWeight("constant weights must be positive")

    @property
    def K(self):
        return len(self.w)

    def log_table(self, idx):
        idx = np.asarray(idx)
        return np.broadcast_to(np.log(self.w), (idx.size, self.K)).copy()

    def structure(self):
        c = np.log(np.asarray(self.w))[None, :]
        return TailStructure(1, c, np.zeros_like(c), np.zeros_like(c))

    def to_config(self):
        return {"family": "constant", "w": list(self.w)}


@dataclass(frozen=True)
class GeometricTilt(WeightSeq):
    """``lambda_i(x) = base(x) * exp(-rates(x) * i)``."""

    base: tuple
    rates: tuple
    name = "geometric_tilt"

    def __post_init__(self):
        object.__setattr__(self, "base", _tuple(self.base))
        object.__setattr__(self, "rates", _tuple(self.rates))
        if len(self.base) != len(self.rates):
            raise WexchError("base and rates must have equal length")
        if any(not v > 0 for v in self.base):
            raise NonPositiveWeight("base weights must be positive")

    @property
    def K(self):
        return len(self.base)

    def log_table(self, idx):
        i = np.asarray(idx, dtype=float)[:, None]
        return np.log(self.base)[None, :] - np.asarray(self.rates)[None, :] * i

    def structure(self):
        c = np.log(np.asarray(self.base))[None, :]
        return TailStructure(1, c, np.asarray(self.rates)[None, :], np.zeros_like(c))

    def to_config(self):
        return {"family": "geometric_tilt", "base": list(self.base), "rates": list(self.rates)}


@dataclass(frozen=True)
class BinaryExample(GeometricTilt):
    """``lambda_i(0) = 1``, ``lambda_i(1) = 2**-i``."""

    base: tuple = (1.0, 1.0)
    rates: tuple = (0.0, math.log(2.0))
    name = "binary_example"

    def log_table(self, idx):
        i = np.asarray(idx, dtype=float)
        out = np.zeros((i.size, 2))
        out[:, 1] = -i * math.log(2.0)
        return out

    def to_config(self):
        return {"family": "binary_example"}


@dataclass(frozen=True)
class PowerTilt(WeightSeq):
    """``lambda_i(x) = base(x) * i**(-exponents(x))``."""

    base: tuple
    exponents: tuple
    name = "power_tilt"

    def __post_init__(self):
        object.__setattr__(self, "base", _tuple(self.base))
        object.__setattr__(self, "exponents", _tuple(self.exponents))
        if len(self.base) != len(self.exponents):
            raise WexchError("base and exponents must have equal length")
        if any(not v > 0 for v in self.base):
            raise NonPositiveWeight("base weights must be positive")

    @property
    def K(self):
        return len(self.base)

    def log_table(self, idx):
        li = np.log(np.asarray(idx, dtype=float))[:, None]
        return np.log(self.base)[None, :] - np.asarray(self.exponents)[None, :] * li

    def structure(self):
        c = np.log(np.asarray(self.base))[None, :]
        return TailStructure(1, c, np.zeros_like(c), np.asarray(self.exponents)[None, :])

    def to_config(self):
        return {"family": "power_tilt", "base": list(self.base), "exponents": list(self.exponents)}


@dataclass(frozen=True)
class CyclicPartition(WeightSeq):
    """Penalise one block of a partition per index, cycling through the blocks.

    ``blocks[x]`` in ``{0, ..., period-1}`` is the block of symbol ``x``;
    ``lambda_i(x) = exp(-log_rate * i)`` if ``blocks[x] == i % period`` else 1.
    The default labels symbol ``x`` with block ``(x % period + 1) % period``, so
    index 1 penalises symbol 0, index 2 symbol 1, and so on.
    """

    K_: int = 3
    log_rate: float = 1.0
    blocks: tuple = ()
    period: int = 3
    name = "cyclic_partition"

    def __post_init__(self):
        if not self.blocks:
            object.__setattr__(
                self, "blocks", tuple((x % self.period + 1) % self.period for x in range(self.K_)))
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if len(self.blocks) != self.K_:
            raise WexchError("need one block label per symbol")
        if any(not 0 <= b < self.period for b in self.blocks):
            raise WexchError("block labels must lie in 0..period-1")
        if self.log_rate < 0:
            raise WexchError("log_rate must be nonnegative")

    @property
    def K(self):
        return self.K_

    def log_table(self, idx):
        i = np.asarray(idx)
        pen = (np.asarray(self.blocks)[None, :] == (i % self.period)[:, None])
        return np.where(pen, -self.log_rate * i[:, None].astype(float), 0.0)

    def structure(self):
        T = self.period
        blocks = np.asarray(self.blocks)
        g = np.array([[self.log_rate if blocks[x] == r else 0.0 for x in range(self.K)]
                      for r in range(T)])
        z = np.zeros_like(g)
        return TailStructure(T, z, g, z)

    def to_config(self):
        return {"family": "cyclic_partition", "K": self.K_, "log_rate": self.log_rate,
                "blocks": list(self.blocks), "period": self.period}


@dataclass(frozen=True)
class BoundedRatio(WeightSeq):
    """Periodic weights: ``lambda_i = table[(i - 1) % len(table)]``."""

    table: tuple
    name = "bounded_ratio"

    def __post_init__(self):
        t = tuple(_tuple(row) for row in self.table)
        if not t or len({len(r) for r in t}) != 1:
            raise WexchError("table rows must be nonempty and of equal length")
        if any(not v > 0 for r in t for v in r):
            raise NonPositiveWeight("table entries must be positive")
        object.__setattr__(self, "table", t)

    @property
    def K(self):
        return len(self.table[0])

    def _arr(self):
        return np.log(np.asarray(self.table))

    def log_table(self, idx):
        i = np.asarray(idx)
        return self._arr()[(i - 1) % len(self.table)]

    def structure(self):
        T = len(self.table)
        arr = self._arr()
        # residue r = i % T holds row (i - 1) % T = (r - 1) % T
        c = arr[[(r - 1) % T for r in range(T)]]
        z = np.zeros_like(c)
        return TailStructure(T, c, z, z)

    def to_config(self):
        return {"family": "bounded_ratio", "table": [list(r) for r in self.table]}


@dataclass(frozen=True)
class Custom(WeightSeq):
    """Finite table with a declared tail rule.

    ``tail="constant"`` repeats the last row, ``"periodic"`` cycles the table,
    ``"unknown"`` also cycles the table for evaluation but claims nothing about
    the tail, so every verdict is Unknown.
    """

    table: tuple
    tail: str = "unknown"
    name = "custom"

    def __post_init__(self):
        t = tuple(_tuple(row) for row in self.table)
        if not t or len({len(r) for r in t}) != 1:
            raise WexchError("table rows must be nonempty and of equal length")
        if any(not v > 0 for r in t for v in r):
            raise NonPositiveWeight("table entries must be positive")
        if self.tail not in ("unknown", "constant", "periodic"):
            raise WexchError(f"unknown tail rule {self.tail!r}")
        object.__setattr__(self, "table", t)

    @property
    def K(self):
        return len(self.table[0])

    def log_table(self, idx):
        i = np.asarray(idx)
        arr = np.log(np.asarray(self.table))
        T = len(self.table)
        if self.tail == "constant":
            return arr[np.minimum(i, T) - 1]
        return arr[(i - 1) % T]

    def structure(self):
        arr = np.log(np.asarray(self.table))
        T = len(self.table)
        if self.tail == "constant":
            c = arr[-1:]
            z = np.zeros_like(c)
            return TailStructure(1, c, z, z, start=T)
        if self.tail == "periodic":
            c = arr[[(r - 1) % T for r in range(T)]]
            z = np.zeros_like(c)
            return TailStructure(T, c, z, z)
        return None

    def to_config(self):
        return {"family": "custom", "table": [list(r) for r in self.table], "tail": self.tail}


def from_config(cfg: dict) -> WeightSeq:
    """Build a weight sequence from its JSON config."""
    fam = cfg.get("family")
    try:
        if fam == "constant":
            return Constant(tuple(cfg["w"]))
        if fam == "binary_example":
            return BinaryExample()
        if fam == "geometric_tilt":
            return GeometricTilt(tuple(cfg["base"]), tuple(cfg["rates"]))
        if fam == "power_tilt":
            return PowerTilt(tuple(cfg["base"]), tuple(cfg["exponents"]))
        if fam == "cyclic_partition":
            return CyclicPartition(int(cfg.get("K", 3)), float(cfg.get("log_rate", 1.0)),
                                   tuple(cfg.get("blocks", ())), int(cfg.get("period", 3)))
        if fam == "bounded_ratio":
            return BoundedRatio(tuple(tuple(r) for r in cfg["table"]))
        if fam == "custom":
            return Custom(tuple(tuple(r) for r in cfg["table"]), cfg.get("tail", "unknown"))
    except KeyError as e:
        raise WexchError(f"weight family {fam!r} is missing parameter {e}") from None
    raise WexchError(f"unknown weight family {fam!r}")


def weight_at(seq: WeightSeq, i: int) -> WeightFn:
    return seq.term_at(i)


def _ref_logs(ref, K: int) -> np.ndarray:
    if ref is None:
        return np.zeros(K)
    lv = ref.log_values if isinstance(ref, WeightFn) else np.log(np.asarray(ref, dtype=float))
    if lv.shape != (K,):
        raise WexchError("reference function has the wrong size")
    return np.asarray(lv, dtype=float)


def ratio_term(seq: WeightSeq, i: int, ref: WeightFn | None = None) -> float:
    """``min_x (lambda_i/ref)(x) / max_x (lambda_i/ref)(x)``."""
    a = seq.term_at(i).log_values - _ref_logs(ref, seq.K)
    return math.exp(a.min() - a.max())


# --- series rules ---------------------------------------------------------

@dataclass(frozen=True)
class Series:
    """A per-index scalar rule: summand ``exp(min_A a_i - max_B a_i)``."""

    rule: str
    A: tuple
    B: tuple
    ref: tuple | None = None

    def log_terms(self, log_table: np.ndarray) -> np.ndarray:
        a = log_table
        if self.ref is not None:
            a = a - np.asarray(self.ref)[None, :]
        return a[:, list(self.A)].min(axis=1) - a[:, list(self.B)].max(axis=1)


def make_series(seq: WeightSeq, rule: str, ref=None, pair=None, subset=None) -> Series:
    K = seq.K
    everything = tuple(range(K))
    if rule == "sufficient":
        r = None if ref is None else tuple(_ref_logs(ref, K))
        return Series("sufficient", everything, everything, r)
    if rule == "binary":
        if K != 2:
            from .errors import WrongAlphabet
            raise WrongAlphabet("the binary criterion needs K = 2")
        return Series("binary", (0, 1), (0, 1))
    if rule == "edge":
        if pair is None or subset is None:
            raise UnknownRule("edge series needs a vertex pair and a subset")
        S = tuple(sorted(set(int(s) for s in subset)))
        x0, x1 = int(pair[0]), int(pair[1])
        if x0 not in S or x1 not in S:
            raise WexchError("edge endpoints must lie in the subset")
        return Series("edge", (x0, x1), S)
    raise UnknownRule(f"unregistered series rule {rule!r}")


@functools.lru_cache(maxsize=16)
def _cached_log_table(seq: WeightSeq, N: int) -> np.ndarray:
    t = seq.log_table(np.arange(1, N + 1))
    t.setflags(write=False)
    return t


def partial_sums(seq: WeightSeq, series: Series, horizons: Iterable[int] = DEFAULT_HORIZONS) -> dict:
    hs = sorted(int(h) for h in horizons)
    if not hs:
        return {}
    N = hs[-1]
    if N <= 10**6:
        terms = np.exp(series.log_terms(_cached_log_table(seq, N)))
        cs = np.cumsum(terms)
        return {h: float(cs[h - 1]) for h in hs}
    out, total, start = {}, 0.0, 1
    for h in hs:
        while start <= h:
            stop = min(h, start + _CHUNK - 1)
            lt = seq.log_table(np.arange(start, stop + 1))
            total += float(np.exp(series.log_terms(lt)).sum())
            start = stop + 1
        out[h] = total
    return out


def _residue_exponents(st: TailStructure, series: Series, r: int) -> tuple[float, float]:
    """Leading (geometric, power) decay exponents of the summand on residue ``r``."""
    g, h = st.g[r], st.h[r]
    A, B = list(series.A), list(series.B)
    gA = g[A].max()
    tieA = [x for x in A if g[x] >= gA - _EXP_TOL]
    hA = h[tieA].max()
    gB = g[B].min()
    tieB = [x for x in B if g[x] <= gB + _EXP_TOL]
    hB = h[tieB].min()
    return float(gA - gB), float(hA - hB)


def classify_series(seq: WeightSeq, series: Series) -> tuple[Verdict, str, dict]:
    st = seq.structure()
    if st is None:
        return Verdict.UNKNOWN, "no-closed-form", {}
    best_div = None
    geo_rates, p_exps = [], []
    for r in range(st.period):
        dg, dh = _residue_exponents(st, series, r)
        if dg > _EXP_TOL:
            geo_rates.append(math.exp(-dg))
            continue
        if dh <= _EXP_TOL:
            best_div = ("eventually-constant-positive", {"residue": r, "period": st.period})
            break
        if dh <= 1 + _EXP_TOL:
            if best_div is None:
                best_div = ("harmonic", {"residue": r, "period": st.period, "power": dh})
            continue
        p_exps.append(dh)
    if best_div is not None:
        return Verdict.DIVERGES, best_div[0], best_div[1]
    if geo_rates and not p_exps:
        return Verdict.CONVERGES, "geometric", {"ratio": max(geo_rates)}
    return Verdict.CONVERGES, "p-series", {"power": min(p_exps)} if p_exps else {}


def tail_classify(seq: WeightSeq, rule: str | Series, ref=None, pair=None, subset=None,
                  horizons: Iterable[int] = DEFAULT_HORIZONS) -> TailClass:
    """Symbolic divergence verdict for a registered per-index series.

    ``rule`` is ``"sufficient"`` (uses ``ref``), ``"binary"``, ``"edge"`` (uses
    ``pair`` and ``subset``) or a prebuilt :class:`Series`.
    """
    series = rule if isinstance(rule, Series) else make_series(seq, rule, ref, pair, subset)
    verdict, tag, detail = classify_series(seq, series)
    return TailClass(verdict, tag, partial_sums(seq, series, horizons), detail)
