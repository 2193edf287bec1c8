"""Even exponential weights on the real line and their tensor products.

Two families are supported, both even and rapidly decaying:

    freud:        w(x) = exp(-a |x|^lam + b),          lam > 1, a > 0
    markov_sonin: w(x) = |x|^beta exp(-a x^2 + b),     beta > 0, a > 0

A d-dimensional weight is the product of one-dimensional factors,
w(x) = prod_i w(x_i).  The parameter b only contributes the constant
factor e^b; it is kept explicit because it carries normalizations such
as the standard Gaussian density (see :func:`gaussian_measure_weight`).

The effective support radius of degree-m weighted polynomials is the
Mhaskar-Rakhmanov-Saff number

    a_m = (gamma_lam * m)^(1/lam),
    gamma_lam = 2 Gamma((1+lam)/2) / (sqrt(pi) Gamma(lam/2)),

and a_m = sqrt(m) for the markov_sonin family.  a_m sets the scale at
which Gauss rules are truncated; only the m^(1/lam) growth matters there,
any fixed multiple is absorbed by the truncation parameter theta.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

FREUD = "freud"
MARKOV_SONIN = "markov_sonin"


class UnsupportedWeight(ValueError):
    """Operation not defined for this weight family/parameters."""


@dataclass(frozen=True)
class WeightSpec:
    """A member of one of the two weight families, with tensor dimension.

    ``lam`` is fixed to 2 for the markov_sonin family; ``beta`` is only
    meaningful there (the strength of the zero at the origin).
    """

    family: str = FREUD
    lam: float = 2.0
    a: float = 0.5
    b: float = 0.0
    beta: float | None = None
    dim: int = 1

    def __post_init__(self):
        if self.family not in (FREUD, MARKOV_SONIN):
            raise UnsupportedWeight(f"unknown family {self.family!r}")
        if not self.lam > 1:
            raise UnsupportedWeight("lam must be > 1")
        if not self.a > 0:
            raise UnsupportedWeight("a must be > 0")
        if self.dim < 1:
            raise UnsupportedWeight("dim must be >= 1")
        if self.family == MARKOV_SONIN:
            if self.beta is None or not self.beta > 0:
                raise UnsupportedWeight("markov_sonin requires beta > 0")
            if self.lam != 2.0:
                raise UnsupportedWeight("markov_sonin has lam fixed to 2")
        elif self.beta is not None:
            raise UnsupportedWeight("beta is only meaningful for markov_sonin")

    def univariate(self) -> "WeightSpec":
        """The one-dimensional factor of this weight."""
        return self if self.dim == 1 else replace(self, dim=1)

    def with_dim(self, dim: int) -> "WeightSpec":
        return replace(self, dim=dim)

    def key(self) -> tuple:
        """Hashable identity of the univariate factor (used for caching)."""
        return (self.family, self.lam, self.a, self.b, self.beta)


def freud(lam: float = 2.0, a: float = 0.5, b: float = 0.0, dim: int = 1) -> WeightSpec:
    return WeightSpec(family=FREUD, lam=lam, a=a, b=b, dim=dim)


def markov_sonin(beta: float, a: float = 1.0, b: float = 0.0, dim: int = 1) -> WeightSpec:
    return WeightSpec(family=MARKOV_SONIN, lam=2.0, a=a, b=b, beta=beta, dim=dim)


def gaussian_measure_weight(p: float, dim: int = 1) -> WeightSpec:
    """Freud weight whose p-th power is the standard Gaussian density.

    Maps lam = 2/p, a = 1/(2p) and a per-coordinate b = -log(2pi)/(2p),
    so that prod_i w(x_i)^p = (2pi)^(-d/2) exp(-|x|^2/2).  Requires
    1 <= p < 2 (p >= 2 gives lam <= 1, outside the family).
    """
    if not 1 <= p < 2:
        raise UnsupportedWeight("gaussian measure mapping needs 1 <= p < 2")
    return WeightSpec(family=FREUD, lam=2.0 / p, a=1.0 / (2.0 * p),
                      b=-math.log(2.0 * math.pi) / (2.0 * p), dim=dim)


def log_weight_1d(spec: WeightSpec, x):
    """log w(x) for the univariate factor; -inf where w vanishes."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if spec.family == FREUD:
        return -spec.a * ax ** spec.lam + spec.b
    with np.errstate(divide="ignore"):
        return spec.beta * np.log(ax) - spec.a * x * x + spec.b


def eval_weight(spec: WeightSpec, x):
    """Evaluate prod_i w(x_i).

    For dim == 1 the input is interpreted elementwise; for dim > 1 the
    last axis must have length dim and is reduced by the product.
    """
    x = np.asarray(x, dtype=float)
    lw = log_weight_1d(spec, x)
    if spec.dim > 1:
        if x.shape[-1] != spec.dim:
            raise ValueError(f"last axis must have length {spec.dim}")
        lw = lw.sum(axis=-1)
    out = np.exp(lw)
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def gamma_lambda(lam: float) -> float:
    """2 Gamma((1+lam)/2) / (sqrt(pi) Gamma(lam/2)), via log-gamma."""
    return math.exp(math.log(2.0) + math.lgamma((1.0 + lam) / 2.0)
                    - 0.5 * math.log(math.pi) - math.lgamma(lam / 2.0))


def mrs_number(spec: WeightSpec, m: int) -> float:
    """Mhaskar-Rakhmanov-Saff number a_m; strictly increasing in m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if spec.family == MARKOV_SONIN:
        return math.sqrt(m)
    return (gamma_lambda(spec.lam) * m) ** (1.0 / spec.lam)


def integral(spec: WeightSpec) -> float:
    """int w(x) dx over R for the univariate factor (closed form)."""
    u = spec.univariate()
    if u.family == MARKOV_SONIN:
        mu = u.beta / 2.0
        return math.exp(u.b) * math.gamma(mu + 0.5) / u.a ** (mu + 0.5)
    # 2 int_0^inf e^{-a x^lam} dx = 2 Gamma(1 + 1/lam) a^{-1/lam}
    return 2.0 * math.exp(u.b) * math.gamma(1.0 + 1.0 / u.lam) * u.a ** (-1.0 / u.lam)


def recip_weight_derivative_coeffs(spec: WeightSpec, s: int) -> list[tuple[float, float]]:
    """Coefficient table of the s-th derivative of 1/w (freud only).

    Returns pairs (c_j, e_j), sorted by decreasing exponent, such that

        (1/w)^(s)(x) = (1/w)(x) * sign(x)^s * sum_j c_j |x|^(e_j),

    with e_j running from s(lam-1) down to lam-s.  Produced by symbolic
    recursion on s, so the exponents are exact; exponents are tracked as
    integer pairs (i, j) meaning i*lam - j to merge colliding terms.
    """
    if spec.family != FREUD:
        raise UnsupportedWeight("derivative expansion requires the freud family")
    if s < 0:
        raise ValueError("s must be >= 0")
    lam, a = spec.lam, spec.a
    terms: dict[tuple[int, int], float] = {(0, 0): 1.0}
    for _ in range(s):
        new: dict[tuple[int, int], float] = {}
        for (i, j), c in terms.items():
            # d/dx [c |x|^e / w] = (c*a*lam |x|^(e+lam-1) + c*e |x|^(e-1)) / w
            key = (i + 1, j + 1)
            new[key] = new.get(key, 0.0) + c * a * lam
            e = i * lam - j
            if e != 0.0:
                key = (i, j + 1)
                new[key] = new.get(key, 0.0) + c * e
        terms = {k: v for k, v in new.items() if v != 0.0}
    table = [(c, i * lam - j) for (i, j), c in terms.items()]
    table.sort(key=lambda t: -t[1])
    return table


def recip_weight_derivative(spec: WeightSpec, s: int, x):
    """Evaluate (1/w)^(s)(x) directly from the coefficient table.

    Overflows to inf where 1/w itself does; callers needing certified
    integrals should use the table and cancel the weight analytically.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    acc = np.zeros_like(ax)
    for c, e in recip_weight_derivative_coeffs(spec, s):
        acc += c * ax ** e
    sgn = np.where(x >= 0, 1.0, -1.0) ** s
    return np.exp(spec.a * ax ** spec.lam - spec.b) * sgn * acc


def spec_to_json(spec: WeightSpec) -> str:
    obj = {"family": spec.family, "lambda": spec.lam, "a": spec.a,
           "b": spec.b, "dim": spec.dim}
    if spec.beta is not None:
        obj["beta"] = spec.beta
    return json.dumps(obj, sort_keys=True)


def spec_from_json(text: str) -> WeightSpec:
    obj = json.loads(text)
    return WeightSpec(family=obj.get("family", FREUD),
                      lam=float(obj.get("lambda", 2.0)),
                      a=float(obj.get("a", 0.5)),
                      b=float(obj.get("b", 0.0)),
                      beta=(None if obj.get("beta") is None else float(obj["beta"])),
                      dim=int(obj.get("dim", 1)))
