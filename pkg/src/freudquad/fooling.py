"""Adversarial bump functions that vanish on a given node set.

Any quadrature with n nodes mis-integrates some unit-norm function: pick
a box that contains no node (pigeonhole over n+1 or more disjoint
boxes), put a smooth bump on it, divide by the weight, and normalize.
The result h-bar is nonnegative, vanishes at every node, has certified
mixed Sobolev norm <= 1, and its weighted integral (known in closed
form) lower-bounds the rule's worst-case error.

Construction, per coordinate:

    g(x)   = phi((x - lo)/delta),  phi(y) = exp(-1/(y(1-y))) on (0,1),
    h(x)   = g(x) / w(x),
    h-bar  = h / (certified norm bound of h).

For d = 1 the candidate boxes are the grid cells (delta (i-1), delta i),
i = n+1 .. 2n+2, with delta = n^(1/lam - 1); the box then sits near
x = n^(1/lam), just outside the reach of budget-n rules.  For d >= 2 the
boxes are indexed by the hyperbola patch

    Gamma_d(M) = {s in N^d : prod s_i <= 2M, s_i >= M^(1/d)},

whose cardinality grows like M (log M)^(d-1); M_n is the smallest
integer with |Gamma_d(M_n)| >= n+1 and delta = M_n^((1/lam - 1)/d).

Norms are never evaluated through 1/w (which overflows in the far
tail): the product (d^k h) * w collapses analytically to bump
derivatives times power factors, see :func:`_factor_profiles`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from .weights import (FREUD, UnsupportedWeight, WeightSpec,
                      recip_weight_derivative_coeffs)

_CANDIDATE_CAP = 16  # free boxes remembered beyond the first


class InternalPigeonholeViolation(RuntimeError):
    """No node-free box found; unreachable if the candidate count > n."""


# ---------------------------------------------------------------------------
# base bump profile

_D = Polynomial([0.0, 1.0, -1.0])        # y(1-y)
_DPRIME = Polynomial([1.0, -2.0])


@lru_cache(maxsize=None)
def _bump_numerator(s: int) -> Polynomial:
    # phi^(s)(y) = P_s(y) * phi(y) / (y(1-y))^(2s)
    if s == 0:
        return Polynomial([1.0])
    p = _bump_numerator(s - 1)
    return (p.deriv() * _D - 2 * (s - 1) * p * _DPRIME) * _D + p * _DPRIME


def bump_derivative(s: int, y):
    """phi^(s) at y, zero outside (0, 1); evaluated in log form."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = (y > 0.0) & (y < 1.0)
    if inside.any():
        yi = y[inside]
        dv = yi * (1.0 - yi)
        expo = -1.0 / dv - 2.0 * s * np.log(dv)
        out[inside] = _bump_numerator(s)(yi) * np.exp(expo)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BumpSpec:
    """The fixed profile phi with its derivative-mass table b_s.

    b[s] is int_0^1 |phi^(s)|; b[0] > 0 is the plain mass.  b_err carries
    the quadrature error bounds, which feed the norm certificates.
    """

    r: int
    b: tuple[float, ...]
    b_err: tuple[float, ...]

    @property
    def b0(self) -> float:
        return self.b[0]


def bump_spec(r: int) -> BumpSpec:
    if r < 0:
        raise ValueError("r must be >= 0")
    vals, errs = [], []
    for s in range(r + 1):
        v, e = quad(lambda y: abs(bump_derivative(s, y)), 0.0, 1.0,
                    epsabs=1e-14, epsrel=1e-12, limit=200)
        vals.append(v)
        errs.append(e)
    return BumpSpec(r=r, b=tuple(vals), b_err=tuple(errs))


# ---------------------------------------------------------------------------
# pigeonhole boxes

def gamma_set(d: int, M: float) -> list[tuple[int, ...]]:
    """Full enumeration of Gamma_d(M), lexicographically ordered."""
    if M < 1:
        raise ValueError("M must be >= 1")
    lo = math.ceil(M ** (1.0 / d) - 1e-9)
    limit = math.floor(2.0 * M + 1e-9)
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining: int, cap: int):
        if remaining == 1:
            out.extend(prefix + (s,) for s in range(lo, cap + 1))
            return
        for s in range(lo, cap + 1):
            rec(prefix + (s,), remaining - 1, cap // s)

    rec((), d, limit)
    return out


def gamma_count(d: int, M: float) -> int:
    """|Gamma_d(M)| without materializing the set."""
    if M < 1:
        raise ValueError("M must be >= 1")
    lo = math.ceil(M ** (1.0 / d) - 1e-9)
    limit = math.floor(2.0 * M + 1e-9)

    @lru_cache(maxsize=None)
    def rec(remaining: int, cap: int) -> int:
        if cap < lo:
            return 0
        if remaining == 1:
            return cap - lo + 1
        return sum(rec(remaining - 1, cap // s) for s in range(lo, cap + 1))

    return rec(d, limit)


@dataclass(frozen=True)
class FreeBox:
    """A node-free box skeleton: position index s, scale delta, bounds."""

    d: int
    lam: float
    n: int
    m_n: int
    delta: float
    s: tuple[int, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    free_found: tuple[tuple[int, ...], ...]
    candidates_scanned: int


def box_skeleton(d: int, lam: float, s: tuple[int, ...], m_n: int) -> FreeBox:
    """Explicit box at index s on the scale-m_n grid (no search)."""
    delta = float(m_n) ** ((1.0 / lam - 1.0) / d)
    lo = tuple(delta * (si - 1) for si in s)
    hi = tuple(delta * si for si in s)
    return FreeBox(d=d, lam=lam, n=0, m_n=m_n, delta=delta, s=tuple(s),
                   lo=lo, hi=hi, free_found=(tuple(s),), candidates_scanned=0)


def _node_matrix(nodes, d: int) -> np.ndarray:
    pts = np.asarray(nodes, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.shape[1] != d:
        raise ValueError(f"nodes must have {d} columns")
    return pts


def _occupied_cells(pts: np.ndarray, delta: float) -> set:
    frac = pts / delta
    cells = np.ceil(frac)
    on_boundary = (cells == frac).any(axis=1)  # boundary points sit in no open box
    rows = cells[~on_boundary]
    return {tuple(int(v) for v in row) for row in rows}


def smallest_pigeonhole_m(d: int, n: int) -> int:
    """Smallest integer M with |Gamma_d(M)| >= n + 1."""
    hi = 1
    while gamma_count(d, hi) < n + 1:
        hi *= 2
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if gamma_count(d, mid) >= n + 1:
            hi = mid
        else:
            lo = mid
    while hi > 1 and gamma_count(d, hi - 1) >= n + 1:
        hi -= 1
    return hi


def find_free_box(nodes, d: int, n: int, lam: float) -> FreeBox:
    """First node-free candidate box against the given adversary nodes.

    d = 1 scans the grid cells i = n+1 .. 2n+2 at scale n^(1/lam - 1);
    d >= 2 scans Gamma_d(M_n).  Existence is a pigeonhole fact whenever
    the node count is <= n; violating it raises.
    """
    pts = _node_matrix(nodes, d)
    if len(pts) > n:
        raise ValueError(f"node count {len(pts)} exceeds the stated budget {n}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if d == 1:
        delta = float(n) ** (1.0 / lam - 1.0)
        candidates = [(i,) for i in range(n + 1, 2 * n + 3)]
        m_n = n
    else:
        m_n = smallest_pigeonhole_m(d, n)
        delta = float(m_n) ** ((1.0 / lam - 1.0) / d)
        candidates = gamma_set(d, m_n)
    occupied = _occupied_cells(pts, delta)
    free = [s for s in candidates if s not in occupied]
    if not free:
        raise InternalPigeonholeViolation(
            f"{len(candidates)} boxes, {len(pts)} nodes, none free")
    s = free[0]
    lo = np.array([delta * (si - 1) for si in s])
    hi = np.array([delta * si for si in s])
    strictly_inside = np.all((pts > lo) & (pts < hi), axis=1)
    if strictly_inside.any():
        raise InternalPigeonholeViolation("cell index disagrees with direct test")
    return FreeBox(d=d, lam=lam, n=n, m_n=m_n, delta=delta, s=s,
                   lo=tuple(lo), hi=tuple(hi),
                   free_found=tuple(free[:_CANDIDATE_CAP]),
                   candidates_scanned=len(candidates))


# ---------------------------------------------------------------------------
# the normalized bump h-bar

def _factor_profiles(spec: WeightSpec, bump_r: int, lo: float, delta: float):
    """Per-coordinate evaluators S_j with S_j(x) = (d/dx)^j (g/w)(x) * w(x).

    Expanding the product rule and the derivative table of 1/w, the
    weight cancels:

        S_j(x) = sum_s C(j,s) delta^-(j-s) phi^(j-s)((x-lo)/delta)
                        * sum_nu c_{s,nu} x^(e_{s,nu}).

    Boxes live in x >= 0, so no sign factor appears.  Only bump values,
    powers of x and delta remain: no overflow for any box position.
    """
    tables = [recip_weight_derivative_coeffs(spec, s) for s in range(bump_r + 1)]

    def make(j: int):
        def S(x):
            x = np.asarray(x, dtype=float)
            y = (x - lo) / delta
            total = np.zeros_like(y)
            for s in range(j + 1):
                gder = bump_derivative(j - s, y) * delta ** (s - j)
                if not np.any(gder):
                    continue
                poly = np.zeros_like(y)
                with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                    for c, e in tables[s]:
                        poly += c * np.where(x > 0, x, 1.0) ** e
                    contrib = np.where(gder == 0.0, 0.0, gder * poly)
                total += math.comb(j, s) * contrib
            return total if total.ndim else float(total)
        return S

    return [make(j) for j in range(bump_r + 1)]


@dataclass(frozen=True)
class FoolingFunction:
    """The normalized bump h-bar over one node-free box.

    ``normalizer`` is the reciprocal certified norm bound of the raw
    bump h = g/w, so the mixed Sobolev norm of h-bar is certified <= 1
    (``norm_estimate`` is the best numerical value, ``norm_slack`` the
    quadrature-error allowance separating it from 1).
    """

    spec: WeightSpec
    bump: BumpSpec
    r: int
    box: FreeBox
    normalizer: float
    norm_estimate: float
    norm_slack: float
    factor_integrals: tuple          # per coordinate: tuple of (value, err) by order
    _factors: tuple                  # per coordinate: tuple of S_j evaluators

    @property
    def delta(self) -> float:
        return self.box.delta

    def weighted_integral(self) -> float:
        """int h-bar w dx = normalizer * (b0 delta)^d, in closed form."""
        return self.normalizer * (self.bump.b0 * self.box.delta) ** self.spec.dim

    def evaluate(self, points):
        """h-bar at the given points; exactly 0 outside the open box.

        Values deep in the tail can exceed float range (the function is
        genuinely that large there); they come back as inf.
        """
        pts = _node_matrix(points, self.spec.dim)
        lo = np.asarray(self.box.lo)
        hi = np.asarray(self.box.hi)
        out = np.zeros(len(pts))
        inside = np.all((pts > lo) & (pts < hi), axis=1)
        if inside.any():
            x = pts[inside]
            y = (x - lo) / self.box.delta
            logg = (-1.0 / (y * (1.0 - y))).sum(axis=1)
            logwinv = (self.spec.a * np.abs(x) ** self.spec.lam - self.spec.b).sum(axis=1)
            with np.errstate(over="ignore"):
                out[inside] = self.normalizer * np.exp(logg + logwinv)
        return out

    def __call__(self, points):
        return self.evaluate(points)

    def partial_derivative(self, points, k: tuple[int, ...]):
        """D^k h-bar; per-coordinate orders k_i <= r."""
        if len(k) != self.spec.dim or any(ki < 0 or ki > self.r for ki in k):
            raise ValueError("k must have one order <= r per coordinate")
        pts = _node_matrix(points, self.spec.dim)
        out = np.full(len(pts), self.normalizer)
        with np.errstate(over="ignore"):
            for i, ki in enumerate(k):
                x = pts[:, i]
                s_val = np.asarray(self._factors[i][ki](x))
                winv = np.exp(self.spec.a * np.abs(x) ** self.spec.lam - self.spec.b)
                out = out * s_val * winv
        return out


def build_fooling(skeleton: FreeBox, bump: BumpSpec, spec: WeightSpec,
                  r: int | None = None) -> FoolingFunction:
    """Assemble h-bar on the given box and certify its norm.

    Each norm factor int |S_j| over the box edge is an adaptive
    quadrature with absolute tolerance 1e-10; the certificate inflates
    every factor by its reported error bound, and the normalizer divides
    by the inflated total, so the norm of h-bar is <= 1 with the
    quadrature slack accounted for.
    """
    if spec.family != FREUD:
        raise UnsupportedWeight("bump construction needs the freud family "
                                "(no derivative table at the origin otherwise)")
    r = bump.r if r is None else r
    if r > bump.r:
        raise ValueError("bump profile was built for a smaller r")
    d = skeleton.d
    if spec.dim != d:
        spec = spec.with_dim(d)
    uni = spec.univariate()
    factors, integrals = [], []
    for i in range(d):
        S = _factor_profiles(uni, r, skeleton.lo[i], skeleton.delta)
        vals = []
        for j in range(r + 1):
            v, e = quad(lambda x, Sj=S[j]: abs(Sj(x)), skeleton.lo[i],
                        skeleton.hi[i], epsabs=1e-10, epsrel=1e-12, limit=200)
            vals.append((v, e))
        factors.append(tuple(S))
        integrals.append(tuple(vals))
    norm_est = 0.0
    norm_bound = 0.0
    for k in np.ndindex(*([r + 1] * d)):
        prod_est = 1.0
        prod_bound = 1.0
        for i, ki in enumerate(k):
            v, e = integrals[i][ki]
            prod_est *= v
            prod_bound *= v + e
        norm_est += prod_est
        norm_bound += prod_bound
    normalizer = 1.0 / norm_bound
    return FoolingFunction(spec=spec, bump=bump, r=r, box=skeleton,
                           normalizer=normalizer,
                           norm_estimate=norm_est * normalizer,
                           norm_slack=(norm_bound - norm_est) * normalizer,
                           factor_integrals=tuple(integrals),
                           _factors=tuple(factors))


@dataclass(frozen=True)
class WitnessReport:
    """Lower-bound witness for one rule: integral and norm certificate."""

    fooling: FoolingFunction
    integral: float
    norm_estimate: float
    norm_certified: float          # certified upper bound for ||h-bar||, <= 1
    box_s: tuple[int, ...]
    delta: float
    m_n: int
    normalizer: float
    best_integral: float           # best over the scanned free boxes
    best_s: tuple[int, ...]
    boxes_scanned: int


def lower_bound_witness(rule, bump: BumpSpec, spec: WeightSpec,
                        r: int | None = None) -> WitnessReport:
    """Witness h-bar against the node set of a built rule.

    Accepts anything with a ``nodes`` attribute (1-d rules give a flat
    array, sparse rules an (N, d) array).  The reported integral is a
    valid lower bound on the rule's worst-case error over the unit ball
    of the order-r mixed Sobolev space: h-bar vanishes on every node, so
    the rule returns 0 for it, while its weighted integral is positive.

    The first free box (the construction's own placement) provides the
    official witness; the report also carries the best integral among
    the scanned free boxes.
    """
    d = spec.dim
    nodes = _node_matrix(rule.nodes, d)
    skeleton = find_free_box(nodes, d, len(nodes), spec.lam)
    fool = build_fooling(skeleton, bump, spec, r=r)
    best_int, best_s = fool.weighted_integral(), skeleton.s
    for alt in skeleton.free_found[1:8]:
        alt_fool = build_fooling(
            box_skeleton(d, spec.lam, alt, skeleton.m_n), bump, spec, r=r)
        cand = alt_fool.weighted_integral()
        if cand > best_int:
            best_int, best_s = cand, alt
    return WitnessReport(fooling=fool, integral=fool.weighted_integral(),
                         norm_estimate=fool.norm_estimate,
                         norm_certified=fool.norm_estimate + fool.norm_slack,
                         box_s=skeleton.s, delta=skeleton.delta,
                         m_n=skeleton.m_n, normalizer=fool.normalizer,
                         best_integral=best_int, best_s=best_s,
                         boxes_scanned=skeleton.candidates_scanned)
