"""Exact, enumeration-based checks of (weighted) exchangeability on small joints."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .core import Dist, JointDist, coordinate_marginal, reweight
from .errors import BadIndex, WexchError
from .permanent import log_rows, weighted_empirical_perm

EXACT_TOL = 1e-9


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    max_violation: float
    tol: float
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": "pass" if self.passed else "fail",
                "max_violation": float(self.max_violation), "tol": self.tol,
                "witness": self.witness, **({"details": self.details} if self.details else {})}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _report(name: str, viol: float, tol: float, witness: dict | None, **details) -> CheckReport:
    passed = bool(viol <= tol)
    return CheckReport(name, passed, float(viol), tol, None if passed else witness, details)


def _symmetry_violation(t: np.ndarray) -> tuple[float, dict | None]:
    """Largest change of ``t`` under an adjacent transposition of axes."""
    worst, witness = 0.0, None
    for k in range(t.ndim - 1):
        d = np.abs(t - np.swapaxes(t, k, k + 1))
        at = np.unravel_index(int(np.argmax(d)), d.shape)
        if d[at] > worst:
            worst = float(d[at])
            witness = {"tuple": [int(v) for v in at], "transposition": [k + 1, k + 2]}
    return worst, witness


def is_exchangeable(Q: JointDist, tol: float = EXACT_TOL) -> CheckReport:
    viol, wit = _symmetry_violation(Q.table)
    return _report("exchangeable", viol, tol, wit)


def log_weight_product(lam, n: int, K: int) -> np.ndarray:
    """``sum_i log lambda_i(x_i)`` over the whole grid ``K^n``."""
    rows = log_rows(lam, n)
    if rows.shape[1] != K:
        raise WexchError("weight sequence and joint use different alphabets")
    out = np.zeros((K,) * n)
    for i in range(n):
        shape = [1] * n
        shape[i] = K
        out = out + rows[i].reshape(shape)
    return out


def weighted_bar(Q: JointDist, lam) -> np.ndarray:
    """``Q(x) / prod_i lambda_i(x_i)``, normalised to total mass 1."""
    with np.errstate(divide="ignore"):
        lq = np.log(Q.table)
    lb = lq - log_weight_product(lam, Q.n, Q.K)
    return np.exp(lb - logsumexp(lb))


def is_weighted_exchangeable(Q: JointDist, lam, tol: float = EXACT_TOL) -> CheckReport:
    viol, wit = _symmetry_violation(weighted_bar(Q, lam))
    return _report("weighted_exchangeable", viol, tol, wit)


def weighted_swap_check(Q: JointDist, lam, i: int, j: int, tol: float = EXACT_TOL) -> CheckReport:
    """Weighted swap identity for every singleton indicator.

    With ``f = 1{X = y}`` the identity reads
    ``Q(y) / (l_i(y_i) l_j(y_j)) = Q(y^ij) / (l_i(y_j) l_j(y_i))``.  Violations are
    reported relative to ``E_Q[1 / (l_i(X_i) l_j(X_j))]``.
    """
    n, K = Q.n, Q.K
    if not 1 <= i < j <= n:
        raise BadIndex(f"need 1 <= i < j <= n, got i={i}, j={j}, n={n}")
    rows = log_rows(lam, n)
    li, lj = rows[i - 1], rows[j - 1]
    shape_i = [1] * n
    shape_i[i - 1] = K
    shape_j = [1] * n
    shape_j[j - 1] = K
    den = li.reshape(shape_i) + lj.reshape(shape_j)
    den_swapped = li.reshape(shape_j) + lj.reshape(shape_i)
    with np.errstate(divide="ignore"):
        lq = np.log(Q.table)
        lq_sw = np.log(np.swapaxes(Q.table, i - 1, j - 1))
    lhs = lq - den
    rhs = lq_sw - den_swapped
    z = logsumexp(lhs)
    d = np.abs(np.exp(lhs - z) - np.exp(rhs - z))
    at = np.unravel_index(int(np.argmax(d)), d.shape)
    wit = {"tuple": [int(v) for v in at], "pair": [i, j]}
    return _report("weighted_swap", float(d[at]), tol, wit)


def all_pairs_swap_check(Q: JointDist, lam, tol: float = EXACT_TOL) -> CheckReport:
    worst = None
    for i in range(1, Q.n + 1):
        for j in range(i + 1, Q.n + 1):
            r = weighted_swap_check(Q, lam, i, j, tol)
            if worst is None or r.max_violation > worst.max_violation:
                worst = r
    if worst is None:
        return _report("weighted_swap_all_pairs", 0.0, tol, None)
    return _report("weighted_swap_all_pairs", worst.max_violation, tol, worst.witness)


def _grid(K: int, n: int) -> np.ndarray:
    return np.indices((K,) * n).reshape(n, -1).T


def conditional_law_check(Q: JointDist, lam, i: int, m: int, tol: float = EXACT_TOL,
                          method: str = "ryser") -> CheckReport:
    """Compare the exact law of ``X_i`` given each atom with the permanent weights.

    An atom fixes the multiset of ``x_1..x_m`` and the exact values of
    ``x_{m+1}..x_n``; atoms are keyed by the sorted first block.
    """
    n, K = Q.n, Q.K
    if not 1 <= i <= m <= n:
        raise BadIndex(f"need 1 <= i <= m <= n, got i={i}, m={m}, n={n}")
    X = _grid(K, n)
    q = Q.table.ravel()
    key = np.concatenate([np.sort(X[:, :m], axis=1), X[:, m:]], axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    atom_mass = np.bincount(inv, weights=q, minlength=len(uniq))
    joint = np.bincount(inv * K + X[:, i - 1], weights=q, minlength=len(uniq) * K).reshape(-1, K)
    rows = log_rows(lam, m)
    cache: dict[tuple, np.ndarray] = {}
    worst, witness, checked = 0.0, None, 0
    for a in np.flatnonzero(atom_mass > 0):
        rep = tuple(int(v) for v in uniq[a, :m])
        if rep not in cache:
            target = weighted_empirical_perm(rows, rep, i, K, method=method).probs
            other = weighted_empirical_perm(rows, rep[::-1], i, K, method=method).probs
            if np.max(np.abs(target - other)) > tol:
                raise WexchError("weighted empirical law depends on representative ordering")
            cache[rep] = target
        cond = joint[a] / atom_mass[a]
        d = float(np.max(np.abs(cond - cache[rep])))
        checked += 1
        if d > worst:
            worst = d
            witness = {"atom_first_block": list(rep),
                       "atom_rest": [int(v) for v in uniq[a, m:]],
                       "exact": [float(v) for v in cond],
                       "weighted_empirical": [float(v) for v in cache[rep]]}
    return _report("conditional_law", worst, tol, witness, i=i, m=m, atoms_checked=checked)


@dataclass(frozen=True)
class FactorResult:
    base: Dist | None
    max_violation: float
    product_violation: float
    marginal_violation: float

    @property
    def found(self) -> bool:
        return self.base is not None


def factor_as_weighted_iid(Q: JointDist, lam, tol: float = EXACT_TOL) -> FactorResult:
    """Return ``P`` with ``Q = P o lambda`` if one exists, else ``base=None``."""
    n = Q.n
    rows = log_rows(lam, n)
    margs = [coordinate_marginal(Q, k + 1).probs for k in range(n)]
    prod = margs[0]
    for k in range(1, n):
        prod = np.multiply.outer(prod, margs[k])
    prod_viol = float(np.max(np.abs(Q.table - prod)))
    with np.errstate(divide="ignore"):
        lp = np.log(margs[0]) - rows[0]
    cand = Dist._trusted(np.exp(lp - logsumexp(lp)))
    marg_viol = max(float(np.max(np.abs(margs[k] - reweight(cand, np.exp(rows[k])).probs)))
                    for k in range(n))
    viol = max(prod_viol, marg_viol)
    return FactorResult(cand if viol <= tol else None, viol, prod_viol, marg_viol)


# --- fixtures used by tests and the verify command -------------------------

def random_weighted_exchangeable(K: int, n: int, lam, rng: np.random.Generator,
                                 sparsity: float = 0.0) -> JointDist:
    """Random symmetric ``bar Q`` (one value per multiset) times ``prod lambda_i``."""
    X = _grid(K, n)
    key = np.sort(X, axis=1)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    vals = rng.random(inv.max() + 1)
    if sparsity:
        vals[rng.random(vals.size) < sparsity] = 0.0
        if not vals.any():
            vals[0] = 1.0
    lb = np.full(vals.size, -np.inf)
    lb[vals > 0] = np.log(vals[vals > 0])
    lq = lb[inv].reshape((K,) * n) + log_weight_product(lam, n, K)
    return JointDist.normalize(np.exp(lq - logsumexp(lq)))


def perturb(Q: JointDist, rng: np.random.Generator, eps: float = 0.05) -> JointDist:
    t = Q.table * (1 + eps * rng.uniform(-1, 1, Q.table.shape)) + eps / Q.table.size * rng.random(Q.table.shape)
    return JointDist.normalize(t)
