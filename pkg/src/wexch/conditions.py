"""Classify weight sequences against the de Finetti / zero-one / LLN conditions.

On a finite alphabet the necessary condition is equivalent to connectivity of
the graph ``G_S`` for every nonempty subset ``S``, and it is then also
sufficient; the binary case collapses everything to one series.  Verdicts are
always the symbolic ones from :mod:`wexch.weights`; partial sums ride along
as evidence.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySubset, InconsistentConclusion, TooManySubsets, WexchError, WrongAlphabet
from .weights import (
    DEFAULT_HORIZONS,
    TailClass,
    Verdict,
    WeightFn,
    WeightSeq,
    make_series,
    tail_classify,
)

MAX_SUBSET_K = 12
SETS = ("dF", "01", "LLN")


class UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.components = len(self.parent)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        self.components -= 1
        return True


@dataclass
class GraphGS:
    subset: tuple
    edges: dict = field(default_factory=dict)      # (x0, x1) -> TailClass, proven divergent
    unknown: dict = field(default_factory=dict)    # (x0, x1) -> TailClass
    absent: dict = field(default_factory=dict)     # (x0, x1) -> TailClass, proven convergent

    def _connected_with(self, pairs) -> bool:
        uf = UnionFind(self.subset)
        for a, b in pairs:
            uf.union(a, b)
        return uf.components == 1

    @property
    def connected(self) -> bool | None:
        """True/False when decided by proven edges, None when Unknown edges matter."""
        if self._connected_with(self.edges):
            return True
        if not self._connected_with(list(self.edges) + list(self.unknown)):
            return False
        return None

    def to_dict(self) -> dict:
        def ed(d):
            return [{"pair": list(k), **v.to_dict()} for k, v in sorted(d.items())]
        return {"S": list(self.subset), "connected": self.connected,
                "edges": ed(self.edges), "unknown_edges": ed(self.unknown),
                "absent_edges": ed(self.absent)}


def build_graph_GS(lam: WeightSeq, S, horizons=DEFAULT_HORIZONS) -> GraphGS:
    S = tuple(sorted(set(int(s) for s in S)))
    if not S:
        raise EmptySubset("S must be nonempty")
    if S[-1] >= lam.K or S[0] < 0:
        raise WexchError("subset contains symbols outside the alphabet")
    g = GraphGS(S)
    for x0, x1 in itertools.combinations(S, 2):
        tc = tail_classify(lam, "edge", pair=(x0, x1), subset=S, horizons=horizons)
        bucket = {Verdict.DIVERGES: g.edges, Verdict.UNKNOWN: g.unknown,
                  Verdict.CONVERGES: g.absent}[tc.verdict]
        bucket[(x0, x1)] = tc
    return g


def subsets_in_order(K: int):
    """Nonempty subsets by cardinality, then lexicographically."""
    for r in range(1, K + 1):
        yield from itertools.combinations(range(K), r)


def edge_summands_monotone(lam: WeightSeq, N: int = 200) -> bool:
    """Numerically confirm that enlarging ``S`` never increases an edge summand."""
    K = lam.K
    table = lam.first(N)
    for S in subsets_in_order(K):
        for y in range(K):
            if y in S:
                continue
            big = tuple(sorted(S + (y,)))
            for pair in itertools.combinations(S, 2):
                small_t = make_series(lam, "edge", pair=pair, subset=S).log_terms(table)
                big_t = make_series(lam, "edge", pair=pair, subset=big).log_terms(table)
                if np.any(big_t > small_t + 1e-12):
                    return False
    return True


@dataclass
class NecessaryReport:
    graphs: list
    verdict: bool | None
    witness: tuple | None

    def to_list(self) -> list:
        return [g.to_dict() for g in self.graphs]


def necessary_report(lam: WeightSeq, horizons=DEFAULT_HORIZONS, check_monotone: bool | None = None) -> NecessaryReport:
    K = lam.K
    if K > MAX_SUBSET_K:
        raise TooManySubsets(f"K={K} gives {2**K - 1} subsets; cap is K <= {MAX_SUBSET_K}")
    if check_monotone is None:
        check_monotone = K <= 6
    if check_monotone and not edge_summands_monotone(lam):
        raise WexchError("edge summands increased when a subset was enlarged")
    graphs, witness, undecided = [], None, False
    for S in subsets_in_order(K):
        g = build_graph_GS(lam, S, horizons)
        graphs.append(g)
        c = g.connected
        if c is False and witness is None:
            witness = S
        elif c is None:
            undecided = True
    if witness is not None:
        verdict = False
    elif undecided:
        verdict = None
    else:
        verdict = True
    return NecessaryReport(graphs, verdict, witness)


def default_candidates(lam: WeightSeq) -> list[tuple[str, WeightFn]]:
    return [("one", WeightFn.ones(lam.K)), ("lambda_1", lam.term_at(1))]


def sufficient_report(lam: WeightSeq, candidates=None, horizons=DEFAULT_HORIZONS) -> dict:
    """Per-candidate verdict for the min/max ratio series against ``ref``."""
    cands = list(candidates) if candidates is not None else default_candidates(lam)
    out = {}
    for name, ref in cands:
        if not isinstance(ref, WeightFn):
            ref = WeightFn.from_values(ref)
        out[name] = tail_classify(lam, "sufficient", ref=ref, horizons=horizons)
    return out


def binary_criterion(lam: WeightSeq, horizons=DEFAULT_HORIZONS) -> TailClass:
    if lam.K != 2:
        raise WrongAlphabet(f"binary criterion needs K = 2, got K = {lam.K}")
    return tail_classify(lam, "binary", horizons=horizons)


def _tri(v: Verdict) -> bool | None:
    return {Verdict.DIVERGES: True, Verdict.CONVERGES: False}.get(v)


@dataclass
class ConditionReport:
    family: dict
    sufficient: dict
    binary: TailClass | None
    necessary: NecessaryReport
    conclusion: dict

    @property
    def definitive(self) -> bool:
        return all(self.conclusion[s] is not None for s in SETS)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "candidates": list(self.sufficient),
            "sufficient": {k: v.to_dict() for k, v in self.sufficient.items()},
            "binary": None if self.binary is None else self.binary.to_dict(),
            "subsets": self.necessary.to_list(),
            "conclusion": self.conclusion,
        }


def _summary(c: dict) -> str:
    m = c["dF"]
    if m is None:
        return "undetermined: some series has no closed-form verdict"
    if m is False:
        return "in none of dF, 01, LLN; necessary condition fails on S=" + str(c["necessary_witness"])
    if c["sufficient"]:
        return "in all sets: sufficient condition holds, hence dF, 01 and LLN"
    return ("in dF = 01 = LLN (necessary condition holds on a finite alphabet); "
            "sufficient condition fails for every tried reference function")


def conclude(sufficient: dict, binary: TailClass | None, nec: NecessaryReport) -> dict:
    suff_verdicts = [_tri(t.verdict) for t in sufficient.values()]
    if any(v is True for v in suff_verdicts):
        suff = True
    elif suff_verdicts and all(v is False for v in suff_verdicts):
        suff = False
    else:
        suff = None
    necessary = nec.verdict
    if suff is True and necessary is False:
        raise InconsistentConclusion("sufficient condition holds but necessary condition fails")
    member = necessary
    if member is None and suff is True:
        member = True
    out = {"sufficient": suff, "necessary": necessary,
           "necessary_witness": None if nec.witness is None else list(nec.witness)}
    for s in SETS:
        out[s] = member
    if binary is not None:
        b = _tri(binary.verdict)
        out["binary"] = b
        out["binary_agrees"] = None if b is None or necessary is None else b == necessary
    out["summary"] = _summary(out)
    return out


def check_conditions(lam: WeightSeq, candidates=None, horizons=DEFAULT_HORIZONS) -> ConditionReport:
    suff = sufficient_report(lam, candidates, horizons)
    binary = binary_criterion(lam, horizons) if lam.K == 2 else None
    nec = necessary_report(lam, horizons)
    return ConditionReport(lam.to_config(), suff, binary, nec, conclude(suff, binary, nec))
