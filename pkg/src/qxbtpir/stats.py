"""Privacy and security testers.

Both compare the distribution of what a coalition sees across two or more
settings (retrieval indices, or stored message tables). The exact path
enumerates every noise draw and compares count tables; the statistical path
runs chi-square contingency tests on every coordinate marginal and every
pairwise joint, Bonferroni-combined into one p-value.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import chi2_contingency

from .protocol import MessageTable, SchemeParams, encode_instance, query_instance

EXACT_LIMIT = 10 ** 6
ALPHA = 0.01


class SampleSizeError(ValueError):
    """Fewer samples than 10 per cell of the largest contingency table."""


@dataclass
class LeakageReport:
    kind: str  # "privacy" | "security"
    method: str  # "exact" | "chi2"
    subset: tuple[int, ...]  # 0-based servers
    p_value: float
    samples: int = 0
    tests: int = 0
    min_p: float = 1.0
    exact_equal: bool | None = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.p_value > ALPHA

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "method": self.method,
            "subset": [s + 1 for s in self.subset], "p_value": self.p_value,
            "samples": self.samples, "tests": self.tests, "min_p": self.min_p,
            "exact_equal": self.exact_equal, "passed": self.passed, **self.detail,
        }


def _chi2_p(table: np.ndarray) -> float:
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 1.0
    return float(chi2_contingency(table, correction=False)[1])


def chi2_compare(groups: Sequence[np.ndarray], q: int) -> tuple[float, int, float]:
    """Bonferroni p-value over marginals and pairwise joints of ``(samples, d)`` groups.

    Returns (p_value, number of tests, smallest raw p).
    """
    d = groups[0].shape[1]
    if d == 0:
        return 1.0, 0, 1.0
    n = min(len(g) for g in groups)
    cells = q * q if d > 1 else q
    if n < 10 * cells:
        raise SampleSizeError(f"{n} samples per group is below 10 x {cells} cells")
    pvals = []
    for c in range(d):
        table = np.stack([np.bincount(g[:, c], minlength=q) for g in groups])
        pvals.append(_chi2_p(table))
    for a, b in itertools.combinations(range(d), 2):
        table = np.stack([np.bincount(g[:, a] * q + g[:, b], minlength=q * q) for g in groups])
        pvals.append(_chi2_p(table))
    m = len(pvals)
    pmin = min(pvals)
    return min(1.0, m * pmin), m, pmin


def _enumerate(q: int, shape: tuple[int, ...]) -> np.ndarray:
    """Every array of ``shape`` over ``[0, q)``, stacked on a leading axis."""
    size = int(np.prod(shape)) if shape else 1
    idx = np.arange(q ** size, dtype=np.int64)
    digits = (idx[:, None] // q ** np.arange(size, dtype=np.int64)[None, :]) % q
    return digits.reshape((q ** size,) + tuple(shape))


def _count_table(views: np.ndarray) -> dict:
    rows, counts = np.unique(views.reshape(len(views), -1), axis=0, return_counts=True)
    return {tuple(r.tolist()): int(c) for r, c in zip(rows, counts)}


def _check_subset(subset, limit: int, N: int, label: str) -> tuple[int, ...]:
    subset = tuple(int(s) for s in subset)
    if len(subset) > limit:
        raise ValueError(f"{label} subset of size {len(subset)} exceeds {limit}")
    if any(not 0 <= s < N for s in subset) or len(set(subset)) != len(subset):
        raise ValueError(f"invalid server subset {subset}")
    return subset


def _pick_method(method: str, space: int) -> str:
    if method == "auto":
        return "exact" if space <= EXACT_LIMIT else "chi2"
    if method not in ("exact", "chi2"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact" and space > EXACT_LIMIT:
        raise ValueError(f"randomness space {space} exceeds the exact limit {EXACT_LIMIT}")
    return method


def privacy_test(params: SchemeParams, t_subset, thetas=(1, 2), samples: int = 10_000,
                 rng: np.random.Generator | None = None, method: str = "auto",
                 noise_terms: int | None = None) -> LeakageReport:
    """Are the queries seen by ``t_subset`` identically distributed across ``thetas``?

    ``noise_terms`` overrides the per-instance query noise count (negative
    controls); the subset-size bound still refers to ``params.T``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    F = params.field
    subset = _check_subset(t_subset, params.T, params.N, "privacy")
    thetas = tuple(int(t) for t in thetas)
    if any(not 1 <= t <= params.K for t in thetas):
        raise ValueError(f"thetas {thetas} outside [1, {params.K}]")
    if not subset:
        return LeakageReport("privacy", "exact", subset, 1.0, exact_equal=True)
    idx = list(subset)
    nts = [inst.noise_terms if noise_terms is None else noise_terms for inst in params.instances]
    space = max(F.q ** (inst.L * nt * params.K) for inst, nt in zip(params.instances, nts))
    method = _pick_method(method, space)

    if method == "exact":
        equal = True
        for inst, nt in zip(params.instances, nts):
            Z = _enumerate(F.q, (inst.L, nt, params.K))
            tables = []
            for th in thetas:
                Q = query_instance(F, inst, th, params.K, nt, None, batch=(len(Z),), Z=Z if nt else None)
                tables.append(_count_table(Q[:, idx]))
            equal = equal and all(t == tables[0] for t in tables[1:])
        return LeakageReport("privacy", "exact", subset, 1.0 if equal else 0.0,
                             samples=space, exact_equal=equal)

    groups = []
    for th in thetas:
        views = [
            query_instance(F, inst, th, params.K, nt, rng, batch=(samples,))[:, idx].reshape(samples, -1)
            for inst, nt in zip(params.instances, nts)
        ]
        groups.append(np.concatenate(views, axis=1))
    p, m, pmin = chi2_compare(groups, F.q)
    return LeakageReport("privacy", "chi2", subset, p, samples=samples, tests=m, min_p=pmin)


def security_test(params: SchemeParams, x_subset, samples: int = 10_000,
                  rng: np.random.Generator | None = None, method: str = "auto",
                  noise_terms: int | None = None, tables: Sequence[MessageTable] | None = None) -> LeakageReport:
    """Are the shares stored at ``x_subset`` independent of the message table?

    The exact path enumerates every message block and every storage noise draw
    per instance. The statistical path compares shares under ``tables``
    (default: the all-zero table against one random table).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    F = params.field
    subset = _check_subset(x_subset, params.X, params.N, "security")
    if not subset:
        return LeakageReport("security", "exact", subset, 1.0, exact_equal=True)
    idx = list(subset)
    X = params.X if noise_terms is None else noise_terms
    K = params.K
    space = max(F.q ** (inst.L * K * (X + 1)) for inst in params.instances)
    method = _pick_method(method, space) if tables is None else "chi2"

    if method == "exact":
        equal = True
        for inst in params.instances:
            R = _enumerate(F.q, (inst.L, X, K)) if X else None
            n_r = 1 if R is None else len(R)
            ref = None
            for block in _enumerate(F.q, (inst.L, K)):
                S = encode_instance(F, inst, block, X, None, batch=(n_r,), R=R)
                tab = _count_table(S[:, idx])
                if ref is None:
                    ref = tab
                elif tab != ref:
                    equal = False
        return LeakageReport("security", "exact", subset, 1.0 if equal else 0.0,
                             samples=space, exact_equal=equal)

    if tables is None:
        tables = [MessageTable(F, np.zeros((K, params.total_symbols), np.int64)),
                  MessageTable.random(params, rng)]
    groups = []
    for W in tables:
        views = [
            encode_instance(F, inst, W.block(inst), X, rng, batch=(samples,))[:, idx].reshape(samples, -1)
            for inst in params.instances
        ]
        groups.append(np.concatenate(views, axis=1))
    p, m, pmin = chi2_compare(groups, F.q)
    return LeakageReport("security", "chi2", subset, p, samples=samples, tests=m, min_p=pmin)


def repeated(test, runs: int, seed: int, **kwargs) -> list[LeakageReport]:
    """Run a tester ``runs`` times with independent child seeds."""
    seqs = np.random.SeedSequence(seed).spawn(runs)
    return [test(rng=np.random.default_rng(s), **kwargs) for s in seqs]
