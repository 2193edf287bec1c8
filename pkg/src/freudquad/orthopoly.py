"""Orthonormal-polynomial recurrences and Gauss rules for even weights.

For a weight w admitted by :mod:`freudquad.weights`, the orthonormal
polynomials p_m(w) satisfy a three-term recurrence encoded by the Jacobi
matrix: evenness of w forces all diagonal coefficients alpha_k to vanish,
so a :class:`RecurrenceTable` is the off-diagonal data beta_k together
with beta_0 = int w dx.

Rules are derived from the table the classical way: nodes are the
eigenvalues of the m x m symmetric tridiagonal Jacobi matrix and the
Cotes numbers come from beta_0 times the squared first eigenvector
components.  For large m the eigenvector matrix is not materialized;
the Cotes numbers are evaluated instead through the reciprocal
Christoffel function sum_{j<m} p_j(x_k)^2, run in a rescaled form that
never over- or underflows.  Both realizations produce the same rule and
are cross-checked in the test suite.

Closed forms cover lam = 2 (Hermite-type, beta_k = k/(2a)) and the
markov_sonin family (generalized Hermite).  For general lam > 1 the
coefficients are produced by a Lanczos tridiagonalization of the
discretized inner product on a truncated interval, with a panel-doubling
convergence control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .weights import (FREUD, MARKOV_SONIN, UnsupportedWeight, WeightSpec,
                      gamma_lambda, integral, log_weight_1d, spec_to_json)

CLOSED_FORM = "closed_form"
STIELTJES = "stieltjes_lanczos"

# above this size gauss_rule switches from the eigenvector path to the
# Christoffel path (the full eigenvector matrix gets expensive)
_EIGVEC_MAX = 2500


class ConvergenceFailure(RuntimeError):
    """Discretized recurrence did not stabilize under refinement."""


class EigenFailure(RuntimeError):
    """Tridiagonal eigensolver did not converge."""


@dataclass(frozen=True)
class RecurrenceTable:
    """Three-term recurrence data (alpha_k, beta_k) for p_m(w).

    alpha is identically zero (even weight); beta[0] stores int w dx and
    beta[k], k >= 1, the squared off-diagonal recurrence coefficients.
    """

    spec: WeightSpec
    alpha: np.ndarray
    beta: np.ndarray
    method: str

    def __len__(self) -> int:
        return len(self.beta)


@dataclass(frozen=True)
class GaussData:
    """Nodes and Cotes numbers of the m-point Gauss rule for w."""

    spec: WeightSpec
    m: int
    nodes: np.ndarray
    cotes: np.ndarray


@dataclass(frozen=True)
class DiscretizationControl:
    """Parameters of the discretized inner product on [-L, L].

    L is the larger of radius_factor * a_M and a tail-driven radius that
    keeps the discarded mass of the degree-2M weighted moment below
    exp(-tail_margin) relative to its peak.
    """

    radius_factor: float = 2.0
    tail_margin: float = 45.0
    panels: int = 48
    points_per_panel: int = 24
    rtol: float = 1e-10
    max_refinements: int = 3


@dataclass(frozen=True)
class SpacingProfile:
    """Min/max spacing of kept consecutive nodes, against the a_m/m scale."""

    count: int
    dmin: float
    dmax: float
    ratio: float
    target: float


def recurrence_closed_form(spec: WeightSpec, M: int) -> RecurrenceTable:
    """Exact recurrence table for lam = 2 weights (plain or markov_sonin)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    u = spec.univariate()
    beta = np.empty(M)
    beta[0] = integral(u)
    k = np.arange(1, M, dtype=float)
    if u.family == FREUD:
        if u.lam != 2.0:
            raise UnsupportedWeight("closed form requires lam = 2")
        beta[1:] = k / (2.0 * u.a)
    else:
        mu = u.beta / 2.0
        beta[1:] = (k / 2.0 + mu * (k % 2)) / u.a
    return RecurrenceTable(spec=u, alpha=np.zeros(M), beta=beta, method=CLOSED_FORM)


def _tail_radius(spec: WeightSpec, M: int, ctrl: DiscretizationControl) -> float:
    from .weights import mrs_number
    lam, a = spec.lam, spec.a
    xstar = (2.0 * M / (a * lam)) ** (1.0 / lam)

    def logmoment(x):
        return -a * x ** lam + 2.0 * M * math.log(x)

    target = logmoment(xstar) - ctrl.tail_margin
    L = max(ctrl.radius_factor * mrs_number(spec, M), 1.5 * xstar)
    while logmoment(L) > target:
        L *= 1.25
    return L


def _discretized_measure(spec: WeightSpec, L: float, panels: int, q: int):
    # quadratic clustering toward 0 keeps |x|^lam resolvable for any lam > 1
    edges = L * (np.arange(panels + 1) / panels) ** 2
    xg, wg = np.polynomial.legendre.leggauss(q)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel() * np.exp(log_weight_1d(spec, x))
    return np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w])


def _lanczos_beta(x: np.ndarray, w: np.ndarray, M: int) -> np.ndarray:
    """Jacobi beta's of the discrete measure sum w_i delta_{x_i}.

    Lanczos tridiagonalization of diag(x) with starting vector sqrt(w),
    fully reorthogonalized.  The symmetric form (no alpha term) is used,
    which enforces alpha_k = 0 exactly.
    """
    beta = np.empty(M)
    beta[0] = w.sum()
    v = np.sqrt(w / beta[0])
    v_prev = np.zeros_like(v)
    basis = [v]
    sq_prev = 0.0
    for k in range(1, M):
        t = x * v - sq_prev * v_prev
        for _ in range(2):
            for u in basis:
                t -= (u @ t) * u
        nrm = float(np.linalg.norm(t))
        if not nrm > 0:
            raise ConvergenceFailure(f"discrete measure exhausted at k={k}")
        beta[k] = nrm * nrm
        v_prev, v = v, t / nrm
        basis.append(v)
        sq_prev = nrm
    return beta


def recurrence_stieltjes(spec: WeightSpec, M: int,
                         ctrl: DiscretizationControl | None = None) -> RecurrenceTable:
    """Recurrence table for any freud weight, by discretized Lanczos.

    Raises ConvergenceFailure if doubling the discretization still moves
    some beta_k by more than ctrl.rtol in relative terms.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    u = spec.univariate()
    if u.family != FREUD:
        raise UnsupportedWeight("stieltjes path covers the freud family")
    ctrl = ctrl or DiscretizationControl()
    L = _tail_radius(u, M, ctrl)
    panels, q = ctrl.panels, ctrl.points_per_panel
    x, w = _discretized_measure(u, L, panels, q)
    beta = _lanczos_beta(x, w, M)
    for _ in range(ctrl.max_refinements):
        panels *= 2
        x, w = _discretized_measure(u, L, panels, q)
        refined = _lanczos_beta(x, w, M)
        change = np.max(np.abs(refined - beta) / refined)
        beta = refined
        if change <= ctrl.rtol:
            return RecurrenceTable(spec=u, alpha=np.zeros(M), beta=beta,
                                   method=STIELTJES)
    raise ConvergenceFailure(
        f"beta not stable to {ctrl.rtol:g} after {ctrl.max_refinements} doublings")


def recurrence_table(spec: WeightSpec, M: int,
                     ctrl: DiscretizationControl | None = None) -> RecurrenceTable:
    """Closed form when available, discretized Lanczos otherwise."""
    u = spec.univariate()
    if u.family == MARKOV_SONIN or u.lam == 2.0:
        return recurrence_closed_form(u, M)
    return recurrence_stieltjes(u, M, ctrl)


def _antisymmetrize(nodes: np.ndarray) -> np.ndarray:
    # pair x_k with -x_{m-1-k}; the middle node of an odd rule becomes exact 0
    out = 0.5 * (nodes - nodes[::-1])
    return out + 0.0  # normalize -0.0 to +0.0


def _christoffel_cotes(table: RecurrenceTable, m: int, nodes: np.ndarray) -> np.ndarray:
    """Cotes numbers via 1 / sum_{j<m} p_j(x)^2, rescaled against overflow.

    Runs the recurrence on q_j = p_j sqrt(w) with a per-node log scale, so
    rules truncated deep in the tail stay computable.  Nodes where w
    vanishes exactly (markov_sonin center) use the unscaled recurrence.
    """
    beta = table.beta
    sq = np.sqrt(beta[1:m])
    x = np.abs(nodes)
    logw = log_weight_1d(table.spec, x)
    finite = np.isfinite(logw)

    scale = np.where(finite, 0.5 * logw, 0.0) - 0.5 * math.log(beta[0])
    q_prev = np.zeros_like(x)
    q = np.ones_like(x)
    acc = np.ones_like(x)
    for j in range(m - 1):
        q_next = (x * q - (sq[j - 1] if j > 0 else 0.0) * q_prev) / sq[j]
        q_prev, q = q, q_next
        acc = acc + q * q
        mag = np.maximum(np.abs(q), np.abs(q_prev))
        big = mag > 1e120
        if big.any():
            c = np.where(big, mag, 1.0)
            q = q / c
            q_prev = q_prev / c
            acc = acc / (c * c)
            scale = scale + np.log(c)
    out = np.empty_like(x)
    out[finite] = np.exp(logw[finite] - 2.0 * scale[finite] - np.log(acc[finite]))
    # w(x) = 0: cotes = 1 / sum p_j(x)^2 with the plain orthonormal values
    out[~finite] = 1.0 / (acc[~finite] * np.exp(2.0 * scale[~finite] + math.log(beta[0])))
    return out


def gauss_rule(table: RecurrenceTable, m: int) -> GaussData:
    """m-point Gauss rule from the first m rows of the recurrence table."""
    if not 1 <= m <= len(table):
        raise ValueError(f"m must be in [1, {len(table)}]")
    beta0 = table.beta[0]
    if m == 1:
        return GaussData(spec=table.spec, m=1, nodes=np.zeros(1),
                         cotes=np.array([beta0]))
    sq = np.sqrt(table.beta[1:m])
    diag = np.zeros(m)
    try:
        if m <= _EIGVEC_MAX:
            nodes, vec = sla.eigh_tridiagonal(diag, sq)
            nodes = _antisymmetrize(nodes)
            cotes = beta0 * vec[0, :] ** 2
            cotes = 0.5 * (cotes + cotes[::-1])
        else:
            nodes = _antisymmetrize(sla.eigvalsh_tridiagonal(diag, sq))
            half = nodes[nodes >= 0]
            ch = _christoffel_cotes(table, m, half)
            cotes = np.concatenate([ch[:0:-1], ch]) if m % 2 else \
                np.concatenate([ch[::-1], ch])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - solver hiccup
        raise EigenFailure(str(exc)) from exc
    return GaussData(spec=table.spec, m=m, nodes=nodes, cotes=cotes)


def zero_bound(spec: WeightSpec, m: int) -> float:
    """Strict enclosure radius for the zeros of p_m(w).

    The truncation scale a_m fixes only the m^(1/lam) growth; the actual
    zeros of p_m(w) for w = exp(-a|x|^lam) live inside the slightly larger
    radius (2m/(a gamma_lam))^(1/lam), which this returns.
    """
    u = spec.univariate()
    if u.family == MARKOV_SONIN:
        return math.sqrt((2.0 * m + u.beta + 2.0) / u.a)
    return (2.0 * m / (u.a * gamma_lambda(u.lam))) ** (1.0 / u.lam)


def count_eigs_below(table: RecurrenceTable, m: int, t: float) -> int:
    """Number of nodes of the m-point rule below t (Sturm/LDL^T count)."""
    return int(count_eigs_below_many(table, np.array([m]), np.array([t]))[0])


def count_eigs_below_many(table: RecurrenceTable, ms: np.ndarray,
                          ts: np.ndarray) -> np.ndarray:
    """Vectorized Sturm counts for several (m, t) pairs at once.

    All pairs share the recurrence table, so the LDL^T sweep runs once up
    to max(ms) with one lane per pair.  O(max(m) * len(ms)) and no
    eigendecompositions; this is what budget scans are built on.
    """
    ms = np.asarray(ms, dtype=int)
    ts = np.asarray(ts, dtype=float)
    mmax = int(ms.max())
    if mmax > len(table):
        raise ValueError("table too short for requested m")
    beta = table.beta
    tiny = 1e-300
    d = -ts.copy()
    d[d == 0.0] = -tiny
    counts = (d < 0).astype(int)
    for i in range(1, mmax):
        d = -ts - beta[i] / d
        d[np.abs(d) < tiny] = -tiny
        counts += (d < 0) & (i < ms)
    return counts


def node_spacing_profile(g: GaussData, theta: float) -> SpacingProfile:
    """Spacing statistics of the nodes kept by truncation at theta * a_m.

    Reports min/max consecutive spacing among nodes with |x| <= x_{j(m)}
    and their ratio, next to the a_m/m reference scale.  Diagnostic only.
    """
    from .weights import mrs_number
    if not 0 < theta < 1:
        raise ValueError("theta must be in (0, 1)")
    target = mrs_number(g.spec, g.m) / g.m
    if g.m < 2:
        return SpacingProfile(count=0, dmin=math.nan, dmax=math.nan,
                              ratio=math.nan, target=target)
    t = theta * mrs_number(g.spec, g.m)
    pos = g.nodes[g.nodes > 0]
    reach = pos[pos >= t]
    cutoff = reach[0] if len(reach) else pos[-1]
    kept = g.nodes[np.abs(g.nodes) <= cutoff]
    if len(kept) < 2:
        return SpacingProfile(count=0, dmin=math.nan, dmax=math.nan,
                              ratio=math.nan, target=target)
    d = np.diff(kept)
    return SpacingProfile(count=len(d), dmin=float(d.min()), dmax=float(d.max()),
                          ratio=float(d.max() / d.min()), target=target)


def gauss_to_csv(g: GaussData) -> str:
    """CSV export: columns k, node, cotes; header carries spec and m."""
    m = g.m
    half = m // 2
    if m % 2:
        ks = list(range(-half, half + 1))
    else:
        ks = [k for k in range(-half, half + 1) if k != 0]
    lines = [f"# spec: {spec_to_json(g.spec)}", f"# m: {m}", "k,node,cotes"]
    for k, x, c in zip(ks, g.nodes, g.cotes):
        lines.append(f"{k},{x:.17g},{c:.17g}")
    return "\n".join(lines) + "\n"
