"""Test families with certified integrals and convergence-rate sweeps.

The interesting integrands here are bump chains: sums of disjoint
normalized tail bumps (built with the fooling machinery) at dyadic
scales.  At every node budget some chain members sit beyond the reach
of the rule under test and contribute their full integral to the error,
which is what makes the measured decay track the n^(-(1-1/lam) r) rate
instead of the much faster decay a single smooth integrand would show.

Families:

  * constant_one     - exactness smoke test; every error at the floor;
  * gaussian_poly    - polynomial times Gaussian, closed-form integral;
  * runge_product    - prod (1+x_i^2)^-1, reference by adaptive quadrature;
  * bump_chain       - the worst-case prober described above;
  * tail_mass        - d=1 chain placed at the outer edge of the *full*
                       Gauss rules, where their nodes are sparse; this is
                       the family on which equal-budget full rules lose
                       to truncated ones.

Every family carries an exact_integral and a reference() method that
reproduces it by independent adaptive quadrature; sweeps refuse to run
when the two disagree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .fooling import (BumpSpec, FoolingFunction, FreeBox, box_skeleton,
                      build_fooling, bump_derivative, bump_spec)
from .quad1d import FULL_GAUSS, TRUNCATED_GAUSS, DyadicRules, apply_rule, full_rule
from .sparse import SparseRule, apply_sparse, build_sparse_rule_combination
from .weights import FREUD, UnsupportedWeight, WeightSpec, integral, log_weight_1d

SPARSE = "sparse"

_REFERENCE_RTOL = 1e-10


class ReferenceMismatch(RuntimeError):
    """exact_integral not reproduced by the adaptive reference quadrature."""


@dataclass(frozen=True)
class TestFunction:
    """An integrand with known weighted integral and certified norm."""

    name: str
    d: int
    r: int
    fn: object
    exact_integral: float
    norm_estimate: float
    reference: object = field(repr=False)

    def __call__(self, points):
        return self.fn(points)

    def self_check(self) -> float:
        """Relative gap between exact_integral and the quadrature reference."""
        ref = self.reference()
        scale = max(abs(self.exact_integral), 1e-300)
        err = abs(ref - self.exact_integral) / scale
        if err > _REFERENCE_RTOL:
            raise ReferenceMismatch(
                f"{self.name}: exact {self.exact_integral!r} vs reference {ref!r}")
        return err


@dataclass
class ConvergenceReport:
    family: str
    rule_kind: str
    d: int
    r: int
    theta: float
    budgets: list
    sizes: list
    errors: list
    floor: float
    at_floor: bool
    slope: float
    intercept: float
    fit_points: int

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "family": self.family, "rule": self.rule_kind,
            "d": self.d, "r": self.r, "theta": self.theta,
            "budgets": list(self.budgets), "sizes": list(self.sizes),
            "errors": list(self.errors), "floor": self.floor,
            "at_floor": self.at_floor, "slope": self.slope,
            "intercept": self.intercept, "fit_points": self.fit_points,
        }


# ---------------------------------------------------------------------------
# families

def _product_quad_reference(factors_1d) -> float:
    val = 1.0
    for f1 in factors_1d:
        v, _ = quad(f1, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
        val *= v
    return val


def constant_one(spec: WeightSpec, d: int) -> TestFunction:
    exact = integral(spec) ** d

    def fn(points):
        pts = np.asarray(points, dtype=float)
        return np.ones(len(pts) if pts.ndim else 1)

    def reference():
        u = spec.univariate()
        return _product_quad_reference(
            [lambda x: math.exp(log_weight_1d(u, x))] * d)

    return TestFunction(name="one", d=d, r=1, fn=fn, exact_integral=exact,
                        norm_estimate=math.nan, reference=reference)


def gaussian_poly(spec: WeightSpec, d: int, c: float = 0.25) -> TestFunction:
    """f(x) = prod (1 + x_i^2) exp(-c x_i^2); closed form for lam = 2."""
    u = spec.univariate()
    if u.family != FREUD or u.lam != 2.0:
        raise UnsupportedWeight("gaussian_poly needs a lam = 2 freud weight")
    alpha = u.a + c
    one_d = math.exp(u.b) * math.sqrt(math.pi / alpha) * (1.0 + 1.0 / (2.0 * alpha))
    exact = one_d ** d

    def fn(points):
        pts = np.asarray(points, dtype=float).reshape(-1, d)
        return np.prod((1.0 + pts * pts) * np.exp(-c * pts * pts), axis=1)

    def reference():
        f1 = lambda x: (1 + x * x) * math.exp(-c * x * x + log_weight_1d(u, x))
        return _product_quad_reference([f1] * d)

    return TestFunction(name="gauss_poly", d=d, r=2, fn=fn, exact_integral=exact,
                        norm_estimate=math.nan, reference=reference)


def runge_product(spec: WeightSpec, d: int) -> TestFunction:
    """f(x) = prod (1 + x_i^2)^-1, reference integral by quadrature."""
    u = spec.univariate()
    f1 = lambda x: math.exp(log_weight_1d(u, x)) / (1.0 + x * x)
    one_d, _ = quad(f1, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
    exact = one_d ** d

    def fn(points):
        pts = np.asarray(points, dtype=float).reshape(-1, d)
        return np.prod(1.0 / (1.0 + pts * pts), axis=1)

    def reference():
        return _product_quad_reference([f1] * d)

    return TestFunction(name="runge", d=d, r=2, fn=fn, exact_integral=exact,
                        norm_estimate=math.nan, reference=reference)


def _chain_from_bumps(name: str, d: int, r: int,
                      bumps: list[FoolingFunction]) -> TestFunction:
    for a, b in zip(bumps, bumps[1:]):
        separated = any(ah <= bl or bh <= al
                        for (al, ah), (bl, bh) in
                        zip(zip(a.box.lo, a.box.hi), zip(b.box.lo, b.box.hi)))
        if not separated:
            raise ValueError("chain bumps must have disjoint boxes")
    count = len(bumps)
    exact = sum(f.weighted_integral() for f in bumps) / count
    norm = sum(f.norm_estimate + f.norm_slack for f in bumps) / count

    def fn(points):
        pts = np.asarray(points, dtype=float).reshape(-1, d)
        total = np.zeros(len(pts))
        for f in bumps:
            total += f.evaluate(pts)
        return total / count

    def reference():
        total = 0.0
        for f in bumps:
            per_axis = 1.0
            for i in range(d):
                lo, hi = f.box.lo[i], f.box.hi[i]
                delta = f.box.delta
                g1 = lambda x, lo=lo, delta=delta: bump_derivative(0, (x - lo) / delta)
                v, _ = quad(g1, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
                per_axis *= v
            total += f.normalizer * per_axis
        return total / count

    return TestFunction(name=name, d=d, r=r, fn=fn, exact_integral=exact,
                        norm_estimate=norm, reference=reference)


def bump_chain(spec: WeightSpec, d: int, r: int,
               levels: range | None = None,
               pos_scale: float = 0.75,
               bump: BumpSpec | None = None) -> TestFunction:
    """Disjoint normalized bumps at dyadic tail scales.

    Level l places a tensor bump on the pigeonhole grid of parameter
    2^l: for d = 1 at x ~ pos_scale * 2^(l/lam), for d >= 2 on the
    balanced corner of the hyperbola patch (all coordinates equal).
    Rules at budget ~2^l resolve the levels below and pay the full
    integral of the levels above; the measured error then decays like
    n^(-(1-1/lam) r) with a staircase wobble.
    """
    u = spec.univariate()
    if u.family != FREUD:
        raise UnsupportedWeight("bump chains need the freud family")
    bump = bump or bump_spec(r)
    bumps = []
    for level in levels:
        m_n = 2 ** level
        if d == 1:
            delta = float(m_n) ** (1.0 / u.lam - 1.0)
            i = int(round(pos_scale * m_n ** (1.0 / u.lam) / delta)) + 1
            s = (i,)
        else:
            delta = float(m_n) ** ((1.0 / u.lam - 1.0) / d)
            side = math.ceil((2.0 * m_n) ** (1.0 / d))
            s = (side,) * d
        skel = box_skeleton(d, u.lam, s, m_n)
        bumps.append(build_fooling(skel, bump, u.with_dim(d), r=r))
    return _chain_from_bumps(f"bumps_d{d}_r{r}", d, r, bumps)


def tail_mass(spec: WeightSpec, r: int, rules: DyadicRules,
              levels: range = range(4, 9),
              width_scale: float = 0.25,
              bump: BumpSpec | None = None) -> TestFunction:
    """d=1 chain hugging the outer edge of the full Gauss rules.

    Level l sits in the gap between the top two nodes of the 2^l-point
    full rule, with width a fraction of that gap: exactly where full
    rules have their sparsest nodes, but comfortably inside the window
    that truncated rules of equal budget cover with interior-quality
    spacing.  Box positions snap to a dyadic grid so the construction
    stays deterministic.
    """
    u = spec.univariate()
    if u.family != FREUD:
        raise UnsupportedWeight("tail_mass needs the freud family")
    bump = bump or bump_spec(r)
    bumps = []
    for level in levels:
        m = 2 ** level
        g = rules.gauss(m)
        top, second = g.nodes[-1], g.nodes[-2]
        gap = top - second
        delta = width_scale * gap
        i = int(round(0.5 * (top + second) / delta))
        lo = delta * (i - 1)
        skel = FreeBox(d=1, lam=u.lam, n=0, m_n=m, delta=delta, s=(i,),
                       lo=(lo,), hi=(lo + delta,), free_found=((i,),),
                       candidates_scanned=0)
        bumps.append(build_fooling(skel, bump, u, r=r))
    return _chain_from_bumps(f"tail_mass_r{r}", 1, r, bumps)


def builtin_families(spec: WeightSpec, d: int, r: int,
                     rules: DyadicRules | None = None) -> list[TestFunction]:
    """The standard families for this weight/dimension/smoothness."""
    fams = [constant_one(spec, d)]
    u = spec.univariate()
    if u.family == FREUD and u.lam == 2.0:
        fams.append(gaussian_poly(spec, d))
    fams.append(runge_product(spec, d))
    fams.append(bump_chain(spec, d, r))
    if d == 1 and u.family == FREUD:
        fams.append(tail_mass(spec, r, rules or DyadicRules(u)))
    return fams


# ---------------------------------------------------------------------------
# sweeps

def _fit(budgets, errors, floor):
    keep = [(n, e) for n, e in zip(budgets, errors) if e > floor]
    if len(keep) < 2:
        return math.nan, math.nan, len(keep), True
    ln = np.log([n for n, _ in keep])
    le = np.log([e for _, e in keep])
    slope, intercept = np.polyfit(ln, le, 1)
    return float(slope), float(intercept), len(keep), False


def run_sweep(rule_kind: str, f: TestFunction, budgets, rules: DyadicRules,
              self_check: bool = True) -> ConvergenceReport:
    """Errors of budget-selected rules of one family on one integrand.

    rule_kind is truncated_gauss, full_gauss (d=1) or sparse.  Budgets
    must be increasing.  The log-log slope is fitted over the points
    above the noise floor 100 eps |exact|; if every point is at the
    floor the report says so instead of failing.
    """
    budgets = list(budgets)
    if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be strictly increasing")
    if self_check:
        f.self_check()
    exact = f.exact_integral
    floor = 100.0 * np.finfo(float).eps * abs(exact)
    errors, sizes = [], []
    sparse_cache: dict[int, SparseRule] = {}
    for n in budgets:
        if rule_kind == TRUNCATED_GAUSS:
            rule = rules.budget_rule(n)
            approx = apply_rule(rule, f)
            size = len(rule)
        elif rule_kind == FULL_GAUSS:
            rule = full_rule(rules.table(n), n)
            approx = apply_rule(rule, f)
            size = len(rule)
        elif rule_kind == SPARSE:
            xi = max(sparse_cache, default=0)
            while True:
                nxt = sparse_cache.get(xi + 1)
                if nxt is None:
                    nxt = build_sparse_rule_combination(rules, f.d, xi + 1)
                    sparse_cache[xi + 1] = nxt
                if len(nxt) > n:
                    break
                xi += 1
            if xi == 0 and 0 not in sparse_cache:
                sparse_cache[0] = build_sparse_rule_combination(rules, f.d, 0)
            rule = sparse_cache[xi]
            if len(rule) > n:
                raise ValueError(f"budget {n} below the xi=0 rule size")
            approx = apply_sparse(rule, f)
            size = len(rule)
        else:
            raise ValueError(f"unknown rule kind {rule_kind!r}")
        errors.append(abs(exact - approx))
        sizes.append(size)
    slope, intercept, fit_points, at_floor = _fit(budgets, errors, floor)
    return ConvergenceReport(family=f.name, rule_kind=rule_kind, d=f.d, r=f.r,
                             theta=rules.theta, budgets=budgets, sizes=sizes,
                             errors=errors, floor=floor, at_floor=at_floor,
                             slope=slope, intercept=intercept,
                             fit_points=fit_points)


def compare_full_vs_truncated(f: TestFunction, budgets, rules: DyadicRules):
    """Paired sweeps of both d=1 families at equal budgets."""
    trunc = run_sweep(TRUNCATED_GAUSS, f, budgets, rules)
    full = run_sweep(FULL_GAUSS, f, budgets, rules, self_check=False)
    return trunc, full
