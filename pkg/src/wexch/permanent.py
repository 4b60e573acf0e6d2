"""Log-space permanents and the permanent-ratio conditional weights.

Row ``k`` of the log matrix is weight function ``k`` and column ``j`` is
observation ``j``: ``M[k, j] = log lambda_k(x_j)``.

``log_permanent`` runs Ryser's inclusion-exclusion over column subsets.  The
matrix is first rescaled (rows and columns, tracked exactly in log space) so
that the alternating sum cancels as little as possible; the low columns are
tabulated by doubling and the high columns are walked in Gray-code order.
Positive and negative terms are accumulated with ``math.fsum``.  When the
observed cancellation makes the result untrustworthy, ``method="auto"`` falls
back to a subset dynamic program whose terms are all positive.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import Dist
from .errors import BadIndex, TooLarge, WexchError

MAX_PERM_N = 20
MAX_WEIGHT_N = 14
MAX_ORACLE_N = 8
_LOW_BITS = 12
_EPS = np.finfo(float).eps
# relative error budget above which auto mode abandons Ryser
_RYSER_BUDGET = 1e-11


@dataclass(frozen=True, eq=False)
class CondWeights:
    n: int
    i: int
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class PermanentInfo:
    log_value: float
    method: str
    amplification: float


def log_matrix(lam, x: Sequence[int]) -> np.ndarray:
    """``M[k, j] = log lambda_k(x_j)`` for ``k, j = 1..n``."""
    x = np.asarray(x, dtype=int)
    rows = log_rows(lam, x.size)
    return rows[:, x]


def log_rows(lam, n: int) -> np.ndarray:
    """First ``n`` weight functions as an ``(n, K)`` log table."""
    if hasattr(lam, "first"):
        return np.asarray(lam.first(n), dtype=float)
    if isinstance(lam, np.ndarray) and lam.ndim == 2:
        if lam.shape[0] < n:
            raise BadIndex("not enough weight functions for the observations")
        return np.asarray(lam[:n], dtype=float)
    fns = list(lam)
    if len(fns) < n:
        raise BadIndex("not enough weight functions for the observations")
    return np.array([np.asarray(getattr(f, "log_values", f), dtype=float) for f in fns[:n]])


def _max_balance(L: np.ndarray) -> tuple[np.ndarray, float]:
    r = L.max(axis=1)
    A = L - r[:, None]
    c = A.max(axis=0)
    A = A - c[None, :]
    r2 = A.max(axis=1)
    A = A - r2[:, None]
    return A, float(r.sum() + c.sum() + r2.sum())


def _sinkhorn_balance(L: np.ndarray, iters: int = 500, tol: float = 1e-3) -> tuple[np.ndarray, float]:
    n = L.shape[0]
    r = np.zeros(n)
    c = np.zeros(n)
    for _ in range(iters):
        r = logsumexp(L - c[None, :], axis=1)
        c = logsumexp(L - r[:, None], axis=0)
        rows = logsumexp(L - r[:, None] - c[None, :], axis=1)
        if np.max(np.abs(rows)) < tol:
            break
    return L - r[:, None] - c[None, :], float(r.sum() + c.sum())


def _ryser_linear(B: np.ndarray) -> tuple[float, float, float]:
    """Ryser on a nonnegative matrix; returns (value, positive sum, negative sum)."""
    n = B.shape[0]
    b = min(n, _LOW_BITS)
    T = np.zeros((1, n))
    par = np.zeros(1, dtype=np.int64)
    for j in range(b):
        T = np.vstack([T, T + B[:, j][None, :]])
        par = np.concatenate([par, par + 1])
    h = n - b
    hv = np.zeros(n)
    hsize = 0
    code = 0
    pos, neg = [], []
    for k in range(1 << h):
        if k:
            # Gray code: flip the lowest set bit of k
            bit = (k & -k).bit_length() - 1
            code ^= 1 << bit
            col = B[:, b + bit]
            if code >> bit & 1:
                hv = hv + col
                hsize += 1
            else:
                hv = hv - col
                hsize -= 1
        terms = np.prod(T + hv[None, :], axis=1)
        odd = (n - (par + hsize)) % 2 == 1
        pos.append(terms[~odd])
        neg.append(terms[odd])
    p = np.concatenate(pos)
    q = np.concatenate(neg)
    value = math.fsum(np.concatenate([p, -q]))
    return value, math.fsum(p), math.fsum(q)


def _is_exact_integer(B: np.ndarray) -> bool:
    if not np.all(B == np.round(B)):
        return False
    # every Ryser term is bounded by the product of full row sums
    return float(np.prod(B.sum(axis=1))) < 2.0**53


def _ryser_log(A: np.ndarray, shift: float) -> tuple[float, float]:
    B = np.exp(A)
    value, p, q = _ryser_linear(B)
    if _is_exact_integer(B):
        amp = 1.0
    else:
        amp = (p + q) / value if value > 0 else math.inf
    if value <= 0:
        return -math.inf, math.inf
    return math.log(value) + shift, amp


def log_permanent_dp(L: np.ndarray) -> float:
    """Row-by-row subset DP in log space; every term is positive."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n == 0:
        return 0.0
    if n > MAX_PERM_N:
        raise TooLarge(f"n={n} exceeds {MAX_PERM_N}")
    size = 1 << n
    f = np.full(size, -np.inf)
    f[0] = 0.0
    masks = np.arange(size)
    pc = np.zeros(size, dtype=np.int64)
    for j in range(n):
        pc += (masks >> j) & 1
    for k in range(n):
        src = masks[pc == k]
        fk = f[src]
        for j in range(n):
            free = (src >> j) & 1 == 0
            dst = src[free] | (1 << j)
            f[dst] = np.logaddexp(f[dst], fk[free] + L[k, j])
    return float(f[size - 1])


def permanent_info(L: np.ndarray, method: str = "auto") -> PermanentInfo:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise WexchError("permanent needs a square matrix")
    n = L.shape[0]
    if n > MAX_PERM_N:
        raise TooLarge(f"n={n} exceeds the exact-permanent cap of {MAX_PERM_N}")
    if n == 0:
        return PermanentInfo(0.0, "empty", 1.0)
    if not np.all(np.isfinite(L)):
        raise WexchError("log entries must be finite (weights strictly positive)")
    if method == "dp":
        return PermanentInfo(log_permanent_dp(L), "dp", 1.0)
    if method not in ("auto", "ryser"):
        raise WexchError(f"unknown permanent method {method!r}")
    A, s = _max_balance(L)
    val, amp = _ryser_log(A, s)
    tag = "ryser"
    if amp * (n + 2) * _EPS > _RYSER_BUDGET:
        A2, s2 = _sinkhorn_balance(L)
        val2, amp2 = _ryser_log(A2, s2)
        if amp2 < 0.5 * amp:
            val, amp, tag = val2, amp2, "ryser-sinkhorn"
    if method == "auto" and amp * (n + 2) * _EPS > _RYSER_BUDGET:
        return PermanentInfo(log_permanent_dp(L), "dp", amp)
    return PermanentInfo(val, tag, amp)


def log_permanent(L: np.ndarray, method: str = "auto") -> float:
    """Log of ``sum_sigma prod_k exp(L[k, sigma(k)])``."""
    return permanent_info(L, method).log_value


def log_permanent_oracle(L: np.ndarray) -> float:
    """Factorial enumeration; reference for small ``n``."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n > MAX_ORACLE_N:
        raise TooLarge(f"n={n} exceeds the oracle cap of {MAX_ORACLE_N}")
    if n == 0:
        return 0.0
    perms = np.array(list(itertools.permutations(range(n))))
    return float(logsumexp(L[np.arange(n)[None, :], perms].sum(axis=1)))


# --- repeated-column collapse ------------------------------------------------

def multiset_log_permanent(Lsym: np.ndarray, counts: Sequence[int]) -> float:
    """Permanent when observation columns repeat.

    ``Lsym[k, s] = log lambda_k(s)`` for the ``n = sum(counts)`` rows and the
    matrix has ``counts[s]`` copies of the column for symbol ``s``.  The DP runs
    over rows with the state being how many copies of each symbol are used.
    """
    Lsym = np.asarray(Lsym, dtype=float)
    counts = [int(c) for c in counts]
    n = sum(counts)
    if Lsym.shape[0] != n:
        raise WexchError("need exactly one weight row per observation")
    if n == 0:
        return 0.0
    shape = tuple(c + 1 for c in counts)
    f = np.full(shape, -np.inf)
    f[(0,) * len(counts)] = 0.0
    for k in range(n):
        g = np.full(shape, -np.inf)
        for s, c in enumerate(counts):
            if c == 0:
                continue
            dst = [slice(None)] * len(counts)
            src = [slice(None)] * len(counts)
            dst[s] = slice(1, None)
            src[s] = slice(0, -1)
            g[tuple(dst)] = np.logaddexp(g[tuple(dst)], f[tuple(src)] + Lsym[k, s])
        f = g
    return float(f[tuple(counts)] + sum(gammaln(c + 1) for c in counts))


# --- conditional weights -------------------------------------------------------

def _check_i(i: int, n: int) -> None:
    if not 1 <= i <= n:
        raise BadIndex(f"i={i} outside 1..{n}")


def conditional_weights(lam, x: Sequence[int], i: int, method: str = "ryser") -> CondWeights:
    """``w_j = lambda_i(x_j) perm(M without row i, column j) / perm(M)``.

    ``method="ryser"`` takes each minor with :func:`log_permanent` (one per
    distinct symbol, since equal symbols give equal minors); ``"multiset"``
    uses the repeated-column DP.
    """
    x = np.asarray(x, dtype=int)
    n = x.size
    _check_i(i, n)
    if n > MAX_WEIGHT_N:
        raise TooLarge(f"n={n} exceeds the conditional-weight cap of {MAX_WEIGHT_N}")
    rows = log_rows(lam, n)
    if n == 1:
        return CondWeights(1, i, np.ones(1))
    symbols = np.unique(x)
    logw_sym = {}
    if method == "ryser":
        M = rows[:, x]
        keep_rows = np.delete(np.arange(n), i - 1)
        for s in symbols:
            j = int(np.flatnonzero(x == s)[0])
            minor = M[np.ix_(keep_rows, np.delete(np.arange(n), j))]
            logw_sym[s] = rows[i - 1, s] + log_permanent(minor)
    elif method == "multiset":
        counts = np.bincount(x, minlength=rows.shape[1])
        sub = np.delete(rows, i - 1, axis=0)
        for s in symbols:
            c = counts.copy()
            c[s] -= 1
            logw_sym[s] = rows[i - 1, s] + multiset_log_permanent(sub, c)
    else:
        raise WexchError(f"unknown method {method!r}")
    lw = np.array([logw_sym[s] for s in x])
    w = np.exp(lw - logsumexp(lw))
    return CondWeights(n, i, w / w.sum())


def oracle_conditional_weights(lam, x: Sequence[int], i: int) -> CondWeights:
    """Direct sum over all ``n!`` permutations."""
    x = np.asarray(x, dtype=int)
    n = x.size
    _check_i(i, n)
    if n > MAX_ORACLE_N:
        raise TooLarge(f"n={n} exceeds the oracle cap of {MAX_ORACLE_N}")
    M = log_matrix(lam, x)
    perms = np.array(list(itertools.permutations(range(n))))
    lp = M[np.arange(n)[None, :], perms].sum(axis=1)
    wt = np.exp(lp - lp.max())
    target = perms[:, i - 1]
    num = np.array([math.fsum(wt[target == j]) for j in range(n)])
    return CondWeights(n, i, num / math.fsum(wt))


def mc_conditional_weights(lam, x: Sequence[int], i: int, n_samples: int,
                           rng: np.random.Generator) -> CondWeights:
    """APPROXIMATE: self-normalised importance sampling over uniform permutations."""
    x = np.asarray(x, dtype=int)
    n = x.size
    _check_i(i, n)
    M = log_matrix(lam, x)
    perms = np.argsort(rng.random((n_samples, n)), axis=1)
    lp = M[np.arange(n)[None, :], perms].sum(axis=1)
    wt = np.exp(lp - lp.max())
    num = np.bincount(perms[:, i - 1], weights=wt, minlength=n)
    return CondWeights(n, i, num / wt.sum())


def aggregate(cw: CondWeights, x: Sequence[int], K: int) -> Dist:
    mass = np.bincount(np.asarray(x, dtype=int), weights=cw.w, minlength=K)
    return Dist._trusted(mass)


def weighted_empirical_perm(lam, x: Sequence[int], i: int, K: int | None = None,
                            method: str = "ryser") -> Dist:
    """``sum_j w_j delta_{x_j}`` as a distribution on the alphabet."""
    x = np.asarray(x, dtype=int)
    if K is None:
        K = log_rows(lam, x.size).shape[1]
    return aggregate(conditional_weights(lam, x, i, method=method), x, K)
