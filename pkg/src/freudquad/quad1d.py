"""One-dimensional rules: full Gauss, truncated Gauss, dyadic levels.

The m-point Gauss rule integrates f against w exactly for polynomials of
degree 2m-1, but spends most of its nodes where the weight is already
negligible.  The truncated rule keeps only the nodes with |x| below the
first node >= theta * a_m (index j(m)), i.e. 2 j(m) nodes plus possibly
the center, and retains the original Cotes numbers.

Budgets, not degrees, drive rule selection here:

  * select_m_for_budget(n) returns the largest m with 2 j(m) <= n, so the
    truncated rule built from it fits the node budget n;
  * dyadic_rule(k) is that rule for the budget 2^k (level 0 is the single
    node 0 with weight int w, exact on constants and odd functions).

j(m) is evaluated without eigendecompositions during scans, by Sturm
counts on the Jacobi matrix; rules that are actually materialized get
their nodes from the eigensolver, and the two index computations are
cross-checked in the tests.  Gauss nodes are not nested across levels,
and nothing here relies on nesting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .orthopoly import (DiscretizationControl, GaussData, RecurrenceTable,
                        count_eigs_below_many, gauss_rule,
                        recurrence_closed_form, recurrence_stieltjes)
from .weights import MARKOV_SONIN, WeightSpec, mrs_number

FULL_GAUSS = "full_gauss"
TRUNCATED_GAUSS = "truncated_gauss"

_SCAN_CHUNK = 256
_SCAN_PATIENCE = 64  # consecutive infeasible m before the budget scan stops


class BudgetTooSmall(ValueError):
    """Node budget below the smallest constructible rule."""


@dataclass(frozen=True)
class QuadRule1D:
    """An applied one-dimensional rule: sorted nodes, positive weights."""

    kind: str
    m: int
    theta: float | None
    nodes: np.ndarray
    weights: np.ndarray
    center_included: bool
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.nodes)


def j_of_m(g: GaussData, theta: float) -> tuple[int, bool]:
    """Smallest index j with x_{m,j} >= theta * a_m, given the nodes.

    Returns (j, degenerate); degenerate means no node reaches the
    threshold, in which case j = floor(m/2) keeps every node.
    """
    if g.m < 2:
        raise ValueError("j(m) needs m >= 2")
    if not 0 < theta < 1:
        raise ValueError("theta must be in (0, 1)")
    t = theta * mrs_number(g.spec, g.m)
    pos = g.nodes[g.nodes > 0]
    below = int(np.searchsorted(pos, t, side="left"))
    if below >= len(pos):
        return g.m // 2, True
    return below + 1, False


def _j_counts(table: RecurrenceTable, ms: np.ndarray, theta: float) -> np.ndarray:
    # j(m) for many m at once via Sturm counts; degenerate m -> floor(m/2),
    # matching j_of_m
    ms = np.asarray(ms, dtype=int)
    ts = np.array([theta * mrs_number(table.spec, int(m)) for m in ms])
    below = count_eigs_below_many(table, ms, ts)
    ceil_half = (ms + 1) // 2
    j = below - ceil_half + 1
    degenerate = (ms - below) == 0
    return np.where(degenerate, ms // 2, j)


def full_rule(table: RecurrenceTable, m: int) -> QuadRule1D:
    g = gauss_rule(table, m)
    return QuadRule1D(kind=FULL_GAUSS, m=m, theta=None, nodes=g.nodes,
                      weights=g.cotes, center_included=bool(m % 2))


def truncated_rule(table: RecurrenceTable, m: int, theta: float,
                   drop_center: bool = False) -> QuadRule1D:
    """Gauss rule restricted to |x| <= x_{m,j(m)}.

    drop_center excludes the node at 0 (markov_sonin rules for beta > r-1
    use this; the choice is explicit, never inferred from the weight).
    """
    g = gauss_rule(table, m)
    j, degenerate = j_of_m(g, theta)
    pos = g.nodes[g.nodes > 0]
    cutoff = pos[j - 1]
    keep = np.abs(g.nodes) <= cutoff
    center = bool(m % 2)
    if drop_center and center:
        keep &= g.nodes != 0.0
        center = False
    return QuadRule1D(kind=TRUNCATED_GAUSS, m=m, theta=theta,
                      nodes=g.nodes[keep], weights=g.cotes[keep],
                      center_included=center, degenerate=degenerate)


def select_m_for_budget(table: RecurrenceTable, n: int, theta: float) -> int:
    """Largest m with 2 j(m) <= n.

    Every m <= n is feasible (j(m) <= m/2), so the linear scan starts at n
    and walks upward with memoized Sturm-count j values, stopping once the
    budget has been exceeded for a long consecutive stretch.  Monotone
    nondecreasing in n.  Raises BudgetTooSmall for n < 2 and ValueError
    if the table is too short to bracket the answer.
    """
    if n < 2:
        raise BudgetTooSmall("need a budget of at least 2 nodes")
    best = max(2, min(n, len(table)))
    m = best
    fails = 0
    while fails < _SCAN_PATIENCE:
        lo = m + 1
        hi = min(lo + _SCAN_CHUNK, len(table) + 1)
        if lo >= hi:
            raise ValueError(
                f"recurrence table (len {len(table)}) too short to bracket m_n; "
                "extend it or use a DyadicRules provider")
        ms = np.arange(lo, hi)
        js = _j_counts(table, ms, theta)
        for mm, jj in zip(ms, js):
            if 2 * jj <= n:
                best = int(mm)
                fails = 0
            else:
                fails += 1
                if fails >= _SCAN_PATIENCE:
                    break
        m = int(ms[-1])
    return best


def apply_rule(rule: QuadRule1D, f) -> float:
    """sum_i weights_i f(nodes_i); f is called once on the node array."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != rule.nodes.shape:
        raise ValueError("integrand must return one value per node")
    if not np.all(np.isfinite(vals)):
        bad = rule.nodes[~np.isfinite(vals)][0]
        raise ValueError(f"integrand returned a non-finite value at node {bad!r}")
    return float(rule.weights @ vals)


def center_rule(table: RecurrenceTable) -> QuadRule1D:
    """The 1-node level-0 rule: node 0, weight int w."""
    return QuadRule1D(kind=TRUNCATED_GAUSS, m=1, theta=None,
                      nodes=np.zeros(1), weights=table.beta[:1].copy(),
                      center_included=True)


def dyadic_rule(table: RecurrenceTable, k: int, theta: float,
                drop_center: bool = False) -> QuadRule1D:
    """Truncated rule within the node budget 2^k (k = 0: the center rule)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return center_rule(table)
    m = select_m_for_budget(table, 2 ** k, theta)
    rule = truncated_rule(table, m, theta, drop_center=drop_center)
    while len(rule) > 2 ** k:  # Sturm/eigen disagreement at the threshold
        m -= 1
        rule = truncated_rule(table, m, theta, drop_center=drop_center)
    return rule


class DyadicRules:
    """Caching provider of the dyadic-level rules for one weight.

    Grows its recurrence table on demand, memoizes Gauss data per m and
    rules per level, and answers size-only queries (level_size) without
    materializing nodes or weights, which keeps deep-level budget checks
    cheap.  Instances are effectively immutable from the outside; all
    returned arrays are shared, do not mutate them.
    """

    def __init__(self, spec: WeightSpec, theta: float = 0.5,
                 ctrl: DiscretizationControl | None = None,
                 drop_center: bool = False):
        if not 0 < theta < 1:
            raise ValueError("theta must be in (0, 1)")
        self.spec = spec.univariate()
        self.theta = theta
        self.drop_center = drop_center
        self._ctrl = ctrl
        self._closed = self.spec.family == MARKOV_SONIN or self.spec.lam == 2.0
        self._table: RecurrenceTable | None = None
        self._gauss: dict[int, GaussData] = {}
        self._rules: dict[int, QuadRule1D] = {}
        self._budget_rules: dict[int, QuadRule1D] = {}
        self._m_for: dict[int, int] = {}

    @property
    def weight_integral(self) -> float:
        return float(self.table(1).beta[0])

    def table(self, M: int) -> RecurrenceTable:
        if self._table is None or len(self._table) < M:
            grown = max(M, 64)
            if self._table is not None:
                grown = max(grown, 2 * len(self._table))
            if self._closed:
                self._table = recurrence_closed_form(self.spec, grown)
            else:
                self._table = recurrence_stieltjes(self.spec, grown, self._ctrl)
        return self._table

    def gauss(self, m: int) -> GaussData:
        if m not in self._gauss:
            self._gauss[m] = gauss_rule(self.table(m), m)
        return self._gauss[m]

    def select_m(self, n: int) -> int:
        if n not in self._m_for:
            table = self.table(max(64, 2 * n))
            while True:
                try:
                    self._m_for[n] = select_m_for_budget(table, n, self.theta)
                    break
                except ValueError:
                    table = self.table(2 * len(table))
        return self._m_for[n]

    def _size_for_budget(self, n: int) -> tuple[int, int]:
        """(m, node count) of the budget-n truncated rule, counts only.

        Applies the same trim as budget_rule: if the center node pushes
        the count past the budget, step m down until it fits.
        """
        m = self.select_m(n)
        while True:
            j = int(_j_counts(self.table(m), np.array([m]), self.theta)[0])
            size = 2 * j + (1 if (m % 2 and not self.drop_center) else 0)
            if size <= n or m <= 2:
                return m, size
            m -= 1

    def level_size(self, k: int) -> int:
        """Node count of rule(k), from index counts only."""
        if k == 0:
            return 1
        return self._size_for_budget(2 ** k)[1]

    def budget_rule(self, n: int) -> QuadRule1D:
        """Truncated rule with at most n nodes (largest m that fits)."""
        if n not in self._budget_rules:
            m, _ = self._size_for_budget(n)
            rule = self._truncate(self.gauss(m))
            while len(rule) > n and m > 2:
                m -= 1
                rule = self._truncate(self.gauss(m))
            self._budget_rules[n] = rule
        return self._budget_rules[n]

    def rule(self, k: int) -> QuadRule1D:
        if k not in self._rules:
            if k < 0:
                raise ValueError("k must be >= 0")
            if k == 0:
                self._rules[k] = center_rule(self.table(1))
            else:
                self._rules[k] = self.budget_rule(2 ** k)
        return self._rules[k]

    def _truncate(self, g: GaussData) -> QuadRule1D:
        j, degenerate = j_of_m(g, self.theta)
        pos = g.nodes[g.nodes > 0]
        cutoff = pos[j - 1]
        keep = np.abs(g.nodes) <= cutoff
        center = bool(g.m % 2)
        if self.drop_center and center:
            keep &= g.nodes != 0.0
            center = False
        return QuadRule1D(kind=TRUNCATED_GAUSS, m=g.m, theta=self.theta,
                          nodes=g.nodes[keep], weights=g.cotes[keep],
                          center_included=center, degenerate=degenerate)
