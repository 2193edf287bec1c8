"""Smolyak algebra over the dyadic 1-d rules: sparse rules on R^d.

Writing Q_{2^k} for the level-k dyadic rule and Delta_k = Q_{2^k} -
Q_{2^(k-1)} (Delta_0 = Q_1), the sparse rule at resolution xi is

    Q_xi = sum_{|k|_1 <= xi} Delta_k,   k in N_0^d,

whose node set is a step hyperbolic cross in the function domain: dense
near the coordinate axes, sparse in the corners, spreading out as xi
grows.  Two equivalent evaluations are provided: the difference form
above, and the combination form

    Q_xi = sum_{L-d+1 <= |k|_1 <= L} (-1)^(L-|k|_1) C(d-1, L-|k|_1) Q_{2^k},

with L = floor(xi); they must produce identical node/coefficient maps
and the test suite holds them to that.  Coincident nodes are merged by
exact float equality: 1-d rules are cached per level, so shared nodes
are bit-identical, and epsilon-merging could glue distinct Gauss nodes
at high levels.

Gauss nodes are not nested across levels, so nothing here assumes
nesting; every level contributes its own nodes and the telescoping
cancellations happen through the coefficient sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .quad1d import BudgetTooSmall, DyadicRules
from .weights import spec_to_json


class SVGDimension(ValueError):
    """Scatter export is only defined for d = 2."""


@dataclass(frozen=True)
class SparseIndexSet:
    """Downward-closed index set {k in N_0^d : |k|_1 <= xi}."""

    d: int
    xi: int
    indices: tuple[tuple[int, ...], ...]

    @classmethod
    def build(cls, d: int, xi: float) -> "SparseIndexSet":
        if d < 1 or xi < 0:
            raise ValueError("need d >= 1 and xi >= 0")
        L = int(math.floor(xi))
        idx = [k for k in product(range(L + 1), repeat=d) if sum(k) <= L]
        return cls(d=d, xi=L, indices=tuple(idx))

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class SparseRule:
    """Deduplicated node/coefficient multiset of Q_xi, with provenance.

    ``terms`` holds the raw signed tensor expansion, one entry per
    (k, e, s) with e a subset of the support of k (zero levels are
    already merged there; the full-subset bookkeeping count is
    ``g_count``).  ``nodes``/``coeffs`` are the merged rule, nodes
    sorted lexicographically, exact-zero coefficients dropped.
    """

    d: int
    xi: int
    nodes: np.ndarray
    coeffs: np.ndarray
    g_count: int
    terms: list = field(repr=False)
    node_index: dict = field(repr=False)

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def coeff_sum(self) -> float:
        return float(self.coeffs.sum())


def _tensor_terms(rules_1d, sign: float, k: tuple, e: tuple, out: list):
    """Append the signed tensor product of the given 1-d rules to out."""
    nodes = [r.nodes for r in rules_1d]
    weights = [r.weights for r in rules_1d]
    sizes = [len(x) for x in nodes]
    grid = np.meshgrid(*nodes, indexing="ij")
    flat = [g.ravel() for g in grid]
    coeff = sign * np.ones(int(np.prod(sizes)))
    for axis, w in enumerate(weights):
        shape = [1] * len(sizes)
        shape[axis] = sizes[axis]
        coeff = coeff * np.broadcast_to(w.reshape(shape), sizes).ravel()
    s_iter = product(*(range(n) for n in sizes))
    for row, (c, s) in enumerate(zip(coeff, s_iter)):
        out.append((tuple(float(x[row]) for x in flat), float(c), (k, e, s)))


def delta_terms(rules: DyadicRules, k: tuple) -> list:
    """Expansion of the tensor difference operator Delta_k.

    Coordinates with k_i = 0 contribute Q_1 outright (their plus/minus
    pair collapses), so the alternating sum runs over subsets e of the
    support of k only, with sign (-1)^(|support| - |e|).
    """
    d = len(k)
    support = [i for i in range(d) if k[i] > 0]
    out: list = []
    for size in range(len(support) + 1):
        for e in combinations(support, size):
            sign = float((-1) ** (len(support) - size))
            levels = [k[i] if (i in e or k[i] == 0) else k[i] - 1 for i in range(d)]
            _tensor_terms([rules.rule(lv) for lv in levels], sign, k, e, out)
    return out


def _dedup(terms: list, d: int, xi: int, g_count: int) -> SparseRule:
    acc: dict[tuple, float] = {}
    for node, coeff, _prov in terms:
        acc[node] = acc.get(node, 0.0) + coeff
    kept = sorted((n, c) for n, c in acc.items() if c != 0.0)
    nodes = np.array([n for n, _ in kept], dtype=float).reshape(len(kept), d)
    coeffs = np.array([c for _, c in kept], dtype=float)
    node_index = {n: i for i, (n, _) in enumerate(kept)}
    return SparseRule(d=d, xi=xi, nodes=nodes, coeffs=coeffs, g_count=g_count,
                      terms=terms, node_index=node_index)


def count_nodes_pre_dedup(rules: DyadicRules, d: int, xi: float) -> int:
    """|G(xi)|: tensor-node count over all (k, e) with e over {1..d}.

    Follows the full-subset bookkeeping (subsets of {1..d}, duplicates
    for k_i = 0 included) with the actual dyadic rule sizes, so it is
    the canonical pre-merge node count of the sparse rule; grows like
    2^xi xi^(d-1).
    """
    iset = SparseIndexSet.build(d, xi)
    sizes = {}

    def level_size(lv: int) -> int:
        if lv not in sizes:
            sizes[lv] = rules.level_size(lv)
        return sizes[lv]

    total = 0
    for k in iset.indices:
        for bits in product((False, True), repeat=d):
            prod_size = 1
            for i in range(d):
                lv = k[i] if bits[i] else max(k[i] - 1, 0)
                prod_size *= level_size(lv)
            total += prod_size
    return total


def build_sparse_rule(rules: DyadicRules, d: int, xi: float) -> SparseRule:
    """Q_xi via the difference form (sum of Delta_k over the index set)."""
    iset = SparseIndexSet.build(d, xi)
    terms: list = []
    for k in iset.indices:
        terms.extend(delta_terms(rules, k))
    return _dedup(terms, d, iset.xi, count_nodes_pre_dedup(rules, d, xi))


def build_sparse_rule_combination(rules: DyadicRules, d: int, xi: float) -> SparseRule:
    """Q_xi via the combination form (signed top-layer tensor rules).

    Same contract and same result as :func:`build_sparse_rule`; this is
    the default evaluation engine since it touches far fewer tensor
    products.
    """
    if d < 1 or xi < 0:
        raise ValueError("need d >= 1 and xi >= 0")
    L = int(math.floor(xi))
    terms: list = []
    for q in range(max(0, L - d + 1), L + 1):
        sign = float((-1) ** (L - q)) * math.comb(d - 1, L - q)
        for k in product(range(q + 1), repeat=d):
            if sum(k) != q:
                continue
            _tensor_terms([rules.rule(lv) for lv in k], sign, k,
                          tuple(range(d)), terms)
    return _dedup(terms, d, L, count_nodes_pre_dedup(rules, d, xi))


def apply_sparse(rule: SparseRule, f) -> float:
    """sum coeff * f(node); f is called once on the (N, d) node array."""
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.shape != (len(rule),):
        raise ValueError("integrand must return one value per node")
    if not np.all(np.isfinite(vals)):
        bad = rule.nodes[~np.isfinite(vals)][0]
        raise ValueError(f"integrand returned a non-finite value at node {bad!r}")
    return float(rule.coeffs @ vals)


def select_xi_for_budget(rules: DyadicRules, d: int, n: int,
                         _cache: dict | None = None) -> int:
    """Largest integer xi whose deduplicated node count is <= n.

    Node sets are nested in xi, so the scan stops at the first level
    that overflows the budget.
    """
    if n < 1:
        raise BudgetTooSmall("need a budget of at least 1 node")
    xi = 0
    while True:
        count = len(build_sparse_rule_combination(rules, d, xi + 1))
        if count > n:
            return xi
        xi += 1


def rule_to_csv(rule: SparseRule, rules: DyadicRules) -> str:
    """CSV export: x_1..x_d, coeff; header carries spec, d, xi."""
    head = [f"# spec: {spec_to_json(rules.spec)}",
            f"# theta: {rules.theta:.17g}",
            f"# d: {rule.d}", f"# xi: {rule.xi}",
            ",".join([f"x_{i + 1}" for i in range(rule.d)] + ["coeff"])]
    for row, c in zip(rule.nodes, rule.coeffs):
        head.append(",".join(f"{v:.17g}" for v in row) + f",{c:.17g}")
    return "\n".join(head) + "\n"


def rule_to_svg(rule: SparseRule, lam: float, size: int = 640) -> str:
    """Scatter of a d=2 node set, axes scaled to the enclosing cube.

    The enclosing cube has half-width max(2^(xi/lam), max |coordinate|),
    the resolution-xi spread of the cross.
    """
    if rule.d != 2:
        raise SVGDimension("scatter export needs d = 2")
    reach = float(np.abs(rule.nodes).max(initial=0.0))
    half = 1.05 * max(2.0 ** (rule.xi / lam), reach, 1e-9)

    def px(v: float) -> float:
        return (v + half) / (2 * half) * size

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{size / 2:.1f}" x2="{size}" y2="{size / 2:.1f}" '
        'stroke="#cccccc" stroke-width="1"/>',
        f'<line x1="{size / 2:.1f}" y1="0" x2="{size / 2:.1f}" y2="{size}" '
        'stroke="#cccccc" stroke-width="1"/>',
    ]
    for x, y in rule.nodes:
        lines.append(f'<circle cx="{px(x):.2f}" cy="{size - px(y):.2f}" r="1.6" '
                     'fill="#1f4e9c"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
