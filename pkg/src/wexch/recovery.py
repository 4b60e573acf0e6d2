"""Rejection thinning, weighted empirical limits and spanning-tree recovery.

All per-index weights are handled in log space.  With reference ``ref`` the
thinning probability is

    p_i(x) = min_x' (lambda_i/ref)(x') / (lambda_i/ref)(x),

so an index kept with probability ``p_i(X_i)`` is a draw from ``P o ref``.
"""
from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import Dist, RandomSource, reweight
from .errors import (
    DegenerateRatio,
    EmptyDenominator,
    NoAcceptances,
    NotATree,
    SameSymbol,
    UndefinedEdge,
    WexchError,
)
from .weights import WeightFn, WeightSeq, _ref_logs

THIN_STREAM = 2
PADDING_SYMBOL = 0


def _rel_logs(lam: WeightSeq, n: int, ref) -> np.ndarray:
    """``log(lambda_i / ref)`` for ``i = 1..n``, shape ``(n, K)``."""
    return lam.first(n) - _ref_logs(ref, lam.K)[None, :]


def _as_symbols(x, K: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64).ravel()
    if x.size and (x.min() < 0 or x.max() >= K):
        raise WexchError("symbols fall outside the alphabet")
    return x


def log_acceptance(lam: WeightSeq, x, ref=None) -> np.ndarray:
    """``log p_i(x_i)`` for a whole sequence."""
    x = _as_symbols(x, lam.K)
    a = _rel_logs(lam, x.size, ref)
    return a.min(axis=1) - a[np.arange(x.size), x]


def acceptance_prob(lam: WeightSeq, i: int, x: int, ref=None) -> float:
    a = lam.term_at(i).log_values - _ref_logs(ref, lam.K)
    return float(np.exp(a.min() - a[int(x)]))


@dataclass(eq=False)
class RejectionTrace:
    probs: np.ndarray          # p_i(x_i), i = 1..n
    accepted: np.ndarray       # 1-based I_1 < I_2 < ...
    counts: np.ndarray         # M_k for k = 1..n
    padding: int = PADDING_SYMBOL

    @property
    def n(self) -> int:
        return int(self.probs.size)

    @property
    def M(self) -> int:
        return int(self.accepted.size)


def extract_subsequence(x, lam: WeightSeq, ref=None, rng: RandomSource | None = None,
                        uniforms: np.ndarray | None = None) -> tuple[RejectionTrace, np.ndarray]:
    """Thin ``x`` with fresh uniforms; returns the trace and the kept symbols."""
    x = _as_symbols(x, lam.K)
    if x.size < 1:
        raise WexchError("need at least one observation")
    if uniforms is None:
        if rng is None:
            raise WexchError("need a RandomSource or explicit uniforms")
        uniforms = rng.uniforms(THIN_STREAM, x.size)
    u = np.asarray(uniforms, dtype=float)
    if u.shape != x.shape:
        raise WexchError("one uniform per observation is required")
    p = np.exp(log_acceptance(lam, x, ref))
    keep = u <= p
    trace = RejectionTrace(p, np.flatnonzero(keep) + 1, np.cumsum(keep))
    return trace, x[keep]


# --- weighted empirical limits --------------------------------------------

class TildeAccumulator:
    """Streaming log-space sums of ``p_i(x_i)`` per symbol."""

    def __init__(self, lam: WeightSeq, ref=None):
        self.lam, self.ref = lam, ref
        self.log_num = np.full(lam.K, -np.inf)
        self.n = 0

    def update(self, chunk) -> "TildeAccumulator":
        chunk = _as_symbols(chunk, self.lam.K)
        if chunk.size == 0:
            return self
        idx = np.arange(self.n + 1, self.n + chunk.size + 1)
        a = self.lam.log_table(idx) - _ref_logs(self.ref, self.lam.K)[None, :]
        lw = a.min(axis=1) - a[np.arange(chunk.size), chunk]
        for s in np.unique(chunk):
            self.log_num[s] = np.logaddexp(self.log_num[s], logsumexp(lw[chunk == s]))
        self.n += chunk.size
        return self

    def dist(self) -> Dist:
        z = logsumexp(self.log_num)
        if not np.isfinite(z):
            raise EmptyDenominator("no observations yet")
        return Dist._trusted(np.exp(self.log_num - z))


def tilde_empirical(x, lam: WeightSeq, ref=None) -> Dist:
    return TildeAccumulator(lam, ref).update(x).dist()


def bar_empirical(trace: RejectionTrace, x, K: int | None = None) -> Dist:
    x = np.asarray(x, dtype=np.int64)
    if trace.M == 0:
        raise NoAcceptances("no index was accepted")
    kept = x[trace.accepted - 1]
    K = int(K if K is not None else x.max() + 1)
    return Dist._trusted(np.bincount(kept, minlength=K) / kept.size)


def convergence_trace(x, lam: WeightSeq, checkpoints, ref=None, trace: RejectionTrace | None = None):
    """Rows ``(n, symbol, tilde_value, bar_value)`` at each checkpoint."""
    x = _as_symbols(x, lam.K)
    acc, rows, prev = TildeAccumulator(lam, ref), [], 0
    for n in sorted(int(c) for c in checkpoints):
        if n > x.size:
            raise WexchError("checkpoint beyond the end of the stream")
        acc.update(x[prev:n])
        prev = n
        tilde = acc.dist().probs
        bar = None
        if trace is not None:
            kept = x[trace.accepted[trace.accepted <= n] - 1]
            bar = np.bincount(kept, minlength=lam.K) / kept.size if kept.size else None
        for s in range(lam.K):
            rows.append({"n": n, "symbol": s, "tilde_value": float(tilde[s]),
                         "bar_value": None if bar is None else float(bar[s])})
    return rows


# --- pairwise ratios and tree reconstruction ------------------------------

@dataclass(frozen=True)
class EdgeEstimate:
    pair: tuple
    log_num: float
    log_den: float
    ess: float
    count: int

    @property
    def undefined(self) -> bool:
        return not np.isfinite(self.log_den)

    @property
    def estimate(self) -> float:
        return float("nan") if self.undefined else float(np.exp(self.log_num - self.log_den))

    @classmethod
    def exact(cls, pair, ratio: float) -> "EdgeEstimate":
        """An edge carrying a known ratio, for forward-computed inputs."""
        ln = np.log(ratio) if ratio > 0 else -np.inf
        return cls(tuple(pair), float(ln), 0.0, float("inf"), 0)

    def to_dict(self) -> dict:
        return {"pair": list(self.pair), "estimate": None if self.undefined else self.estimate,
                "ess": self.ess, "count": self.count}


def pairwise_ratio(x, lam: WeightSeq, a: int, b: int, ref=None) -> EdgeEstimate:
    """Weighted share of ``a`` among observations in ``{a, b}``.

    Each such index carries weight ``min{r_i(a), r_i(b)} / r_i(x_i)`` with
    ``r_i = lambda_i / ref``; the limit is ``R(a) / (R(a) + R(b))`` for
    ``R = P o ref``.
    """
    a, b = int(a), int(b)
    if a == b:
        raise SameSymbol(f"edge endpoints coincide: {a}")
    x = _as_symbols(x, lam.K)
    hit = np.flatnonzero((x == a) | (x == b))
    if hit.size == 0:
        return EdgeEstimate((a, b), -np.inf, -np.inf, 0.0, 0)
    r = lam.log_table(hit + 1) - _ref_logs(ref, lam.K)[None, :]
    lw = np.minimum(r[:, a], r[:, b]) - r[np.arange(hit.size), x[hit]]
    log_den = float(logsumexp(lw))
    on_a = x[hit] == a
    log_num = float(logsumexp(lw[on_a])) if on_a.any() else -np.inf
    ess = float(np.exp(2 * log_den - logsumexp(2 * lw)))
    return EdgeEstimate((a, b), log_num, log_den, ess, int(hit.size))


def _check_tree(S: tuple, edges) -> tuple[int, dict]:
    Sset = set(S)
    parent = {}
    for e in edges:
        p, c = e.pair
        if p not in Sset or c not in Sset:
            raise NotATree(f"edge {e.pair} leaves the vertex set")
        if c in parent:
            raise NotATree(f"vertex {c} has two parents")
        parent[c] = p
    roots = [s for s in S if s not in parent]
    if len(edges) != len(S) - 1 or len(roots) != 1:
        raise NotATree("edges do not form a rooted spanning tree")
    root = roots[0]
    children: dict = {s: [] for s in S}
    for e in edges:
        children[e.pair[0]].append(e)
    seen, queue = {root}, deque([root])
    while queue:
        for e in children[queue.popleft()]:
            seen.add(e.pair[1])
            queue.append(e.pair[1])
    if seen != Sset:
        raise NotATree("edges contain a cycle or miss a vertex")
    return root, children


@dataclass
class ReconstructedComponent:
    support: tuple
    root: int
    edges: list
    log_unnormalized: dict
    tilde: Dist
    tilde_star: Dist
    complete_graph_fallback: bool = False
    notes: dict = field(default_factory=dict)

    def predicted_marginal(self, lam: WeightSeq, i: int) -> Dist:
        return reweight(self.tilde_star, lam.term_at(i))

    def to_dict(self) -> dict:
        return {"support": list(self.support), "root": self.root,
                "edges": [e.to_dict() for e in self.edges],
                "unnormalized": {str(k): float(np.exp(v)) for k, v in self.log_unnormalized.items()},
                "tilde": [float(v) for v in self.tilde.probs],
                "tilde_star": [float(v) for v in self.tilde_star.probs],
                "complete_graph_fallback": self.complete_graph_fallback, **self.notes}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def tree_reconstruct(S, edges, ref=None, K: int | None = None) -> ReconstructedComponent:
    S = tuple(sorted(set(int(s) for s in S)))
    if not S:
        raise NotATree("empty vertex set")
    edges = list(edges)
    root, children = _check_tree(S, edges)
    for e in edges:
        if e.undefined:
            raise UndefinedEdge(f"edge {e.pair} has no observations")
        if not 0.0 < e.estimate < 1.0:
            raise DegenerateRatio(f"edge {e.pair} has ratio {e.estimate}")
    if K is None:
        K = ref.K if isinstance(ref, WeightFn) else (len(ref) if ref is not None else S[-1] + 1)
    logp = {root: 0.0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for e in children[v]:
            # log((1 - r) / r) with r = exp(log_num - log_den)
            lr = e.log_num - e.log_den
            logp[e.pair[1]] = logp[v] + float(np.log(-np.expm1(lr))) - lr
            queue.append(e.pair[1])
    lp = np.full(K, -np.inf)
    for s, v in logp.items():
        lp[s] = v
    tilde = Dist._trusted(np.exp(lp - logsumexp(lp)))
    ls = lp - _ref_logs(ref, K)
    star = Dist._trusted(np.exp(ls - logsumexp(ls)))
    return ReconstructedComponent(S, root, edges, logp, tilde, star)


def spanning_tree(S, lam: WeightSeq) -> tuple[list, bool]:
    """BFS tree on ``G_S`` from the smallest symbol, neighbours in order.

    Returns ``(directed pairs, used_complete_graph)``.
    """
    from .conditions import build_graph_GS

    S = tuple(sorted(set(int(s) for s in S)))
    if lam.structure() is None:
        adj_pairs, fallback = [(a, b) for i, a in enumerate(S) for b in S[i + 1:]], True
    else:
        adj_pairs, fallback = list(build_graph_GS(lam, S, horizons=()).edges), False
    adj = {s: set() for s in S}
    for a, b in adj_pairs:
        adj[a].add(b)
        adj[b].add(a)
    seen, queue, out = {S[0]}, deque([S[0]]), []
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v]):
            if w not in seen:
                seen.add(w)
                out.append((v, w))
                queue.append(w)
    if len(seen) != len(S):
        raise NotATree(f"G_S is disconnected on S={list(S)}; no spanning tree")
    return out, fallback


def recover_component(x, lam: WeightSeq, ref=None) -> ReconstructedComponent:
    x = _as_symbols(x, lam.K)
    S = tuple(int(s) for s in np.unique(x))
    pairs, fallback = spanning_tree(S, lam)
    edges = []
    for a, b in pairs:
        e = pairwise_ratio(x, lam, a, b, ref)
        if e.undefined:
            raise UndefinedEdge(f"edge {(a, b)} has no observations")
        edges.append(e)
    rc = tree_reconstruct(S, edges, ref, K=lam.K)
    rc.complete_graph_fallback = fallback
    rc.notes["n"] = int(x.size)
    return rc


def forward_edges(R: Dist, pairs) -> list[EdgeEstimate]:
    """Exact edge ratios ``R(a) / (R(a) + R(b))`` for a tree given as pairs."""
    p = R.probs
    return [EdgeEstimate.exact((a, b), p[a] / (p[a] + p[b])) for a, b in pairs]


def trace_to_csv(rows, edge_rows=None) -> str:
    """CSV with columns ``n, symbol, tilde_value, bar_value, edge, edge_ratio``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "symbol", "tilde_value", "bar_value", "edge", "edge_ratio"])
    for r in rows:
        w.writerow([r["n"], r["symbol"], repr(r["tilde_value"]),
                    "" if r["bar_value"] is None else repr(r["bar_value"]), "", ""])
    for r in edge_rows or ():
        w.writerow([r["n"], "", "", "", f"{r['pair'][0]}-{r['pair'][1]}",
                    "" if r["estimate"] is None else repr(r["estimate"])])
    return buf.getvalue()
