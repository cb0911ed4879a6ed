"""Numerical kernel shared by the analytical engine.

Gaussian tail function, truncated lognormal moments, adaptive quadrature
with break-point hints, Euler-accelerated inversion of Laplace transforms
of CCDFs, and tail-truncated discrete sums.  Everything here is a pure
function of its arguments and safe to call concurrently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError

LN10 = math.log(10.0)
_SQRT2 = math.sqrt(2.0)

# Binomial averaging window for Euler summation.  11 is the classic choice;
# widening it buys little once the partial sums alternate cleanly.
_EULER_WINDOW = 11


def q_function(x):
    """Standard Gaussian CCDF Q(x) = P(Z > x).  Vectorized; saturates to 0/1
    at extreme |x| without overflow."""
    from scipy.special import erfc

    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def gaussian_pdf(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class LognormalParams:
    """Natural-log-scale parameters of the linear shadowing gain
    S = 10^(-(beta + chi)/10) with chi ~ N(0, xi^2) in dB.

    m = -0.1*beta*ln10 and sigma = 0.1*xi*ln10, so S ~ Lognormal(m, sigma^2).
    sigma = 0 is accepted as the deterministic limit (point mass at exp(m));
    the moment helpers fall back to indicator forms there.
    """

    m: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.m):
            raise ValueError(f"non-finite lognormal location m={self.m}")
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"lognormal sigma must be >= 0, got {self.sigma}")

    @classmethod
    def from_db(cls, beta_db: float, xi_db: float) -> "LognormalParams":
        """Build from the dB-domain intercept beta and shadowing std xi."""
        return cls(m=-0.1 * beta_db * LN10, sigma=0.1 * xi_db * LN10)

    def to_db(self) -> tuple[float, float]:
        """Inverse of from_db: returns (beta_db, xi_db)."""
        return (-10.0 * self.m / LN10, 10.0 * self.sigma / LN10)

    def moment(self, n: float) -> float:
        """E[S^n] = exp(sigma^2 n^2 / 2 + m n)."""
        return math.exp(0.5 * self.sigma**2 * n**2 + self.m * n)


def truncated_lognormal_moment(p: LognormalParams, n: float, x, side: str = "lower"):
    """Truncated n-th moment of S ~ Lognormal(p.m, p.sigma^2).

    side="lower" returns int_0^x s^n f_S(s) ds
                 = E[S^n] * Q((sigma^2 n - ln x + m)/sigma);
    side="upper" returns the complement int_x^inf, so lower + upper = E[S^n].
    Vectorized over x; raises on x <= 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or not np.all(np.isfinite(x)):
        raise ValueError("truncation point x must be positive and finite")
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    full = p.moment(n)
    if p.sigma > 0.0:
        arg = (p.sigma**2 * n - np.log(x) + p.m) / p.sigma
        q = q_function(arg if side == "lower" else -arg)
        return full * q
    # deterministic S = exp(m): all mass at one point
    below = np.log(x) >= p.m
    ind = np.where(below, 1.0, 0.0)
    return full * (ind if side == "lower" else 1.0 - ind)


def integrate_adaptive(f, a, b, *, points=(), rel_tol=1e-8, abs_tol=1e-12,
                       limit=200, complex_valued=False):
    """Globally adaptive quadrature of f over (a, b), splitting at the interior
    break points first (QUADPACK underneath).  b may be inf; break points
    outside (a, b) are ignored."""
    inner = sorted({float(p) for p in points if a < p < b and math.isfinite(p)})
    edges = [a, *inner, b]
    total = 0.0j if complex_valued else 0.0
    with warnings.catch_warnings():
        # endpoint singularities (integrable power laws) trip QUADPACK's
        # roundoff heuristic while the value is already well inside tolerance
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(f, lo, hi, epsabs=abs_tol, epsrel=rel_tol,
                                    limit=limit, complex_func=complex_valued)
            total += val
    return total


@dataclass(frozen=True)
class InversionConfig:
    """Parameters of the Euler-accelerated Fourier-series inversion.

    a:          scaled contour abscissa A; the contour is Re z = a/(2y).
                exp(-a) bounds the discretization (aliasing) error.
    terms:      partial sums computed before the binomial average is taken.
    truncation: hard cap on the series length when the accelerants have not
                settled at `terms` and the series is extended.
    rel_tol:    agreement required between successive accelerants.
    """

    a: float = 18.4
    terms: int = 50
    truncation: int = 200
    rel_tol: float = 1e-8

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError("contour abscissa a must be > 0")
        if self.terms < 10:
            raise ValueError("need at least 10 series terms")
        if self.truncation < self.terms:
            raise ValueError("truncation must be >= terms")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")


DEFAULT_INVERSION = InversionConfig()


def invert_laplace_ccdf(transform, y: float, cfg: InversionConfig | None = None) -> float:
    """Evaluate the CCDF F(y) of a nonnegative random variable from the Laplace
    transform `transform` of its CCDF.

    Uses the Fourier-series (Bromwich) representation
        F(y) = (2 e^{ay} / pi) * int_0^inf Re(Lbar(a + iu)) cos(uy) du,
    discretized at half-period steps pi/y so the partial sums alternate, and
    accelerated with Euler (binomial) averaging:

        F(y) ~ e^{A/2}/(2y) * [e_0 + 2 * sum_k (-1)^k e_k],
        e_k = Re(Lbar((A + 2 pi i k) / (2y))).

    The result is clamped to [0, 1].  Raises ConvergenceError when successive
    Euler accelerants still disagree beyond cfg.rel_tol at cfg.truncation terms.
    """
    cfg = cfg or DEFAULT_INVERSION
    if y < 0.0 or not math.isfinite(y):
        raise ValueError("inversion point y must be finite and >= 0")
    if y == 0.0:
        return 1.0  # CCDF of a nonnegative variable at the origin

    half_weight = math.exp(0.5 * cfg.a) / (2.0 * y)

    coeffs: list[float] = []

    def extend_to(n):
        for k in range(len(coeffs), n + 1):
            z = complex(cfg.a, 2.0 * math.pi * k) / (2.0 * y)
            e = complex(transform(z)).real
            coeffs.append(e if k == 0 else 2.0 * (-1.0) ** k * e)

    def accelerant(n):
        # binomial average of partial sums s_{n-m} .. s_n
        m = min(_EULER_WINDOW, n - 1)
        s = np.cumsum(coeffs[: n + 1]) * half_weight
        w = np.array([math.comb(m, j) for j in range(m + 1)], dtype=float) * 0.5**m
        return float(np.dot(w, s[n - m : n + 1]))

    n = cfg.terms
    extend_to(n)
    est, prev = accelerant(n), accelerant(n - 1)
    # exp(-a) is the aliasing floor of the discretization: agreement below it
    # cannot be certified and is not demanded
    floor = math.exp(-cfg.a)
    while abs(est - prev) > cfg.rel_tol * abs(est) + floor:
        if n >= cfg.truncation:
            raise ConvergenceError(
                f"Euler accelerants still differ by {abs(est - prev):.3e} "
                f"after {n} terms (rel_tol={cfg.rel_tol})"
            )
        n += 1
        extend_to(n)
        est, prev = accelerant(n), est
    return min(1.0, max(0.0, est))


def truncated_sum(term, weight_ccdf, eps: float = 1e-9, *, start: int = 0,
                  max_terms: int = 10**7) -> float:
    """Sum term(n) for n = start, start+1, ... until the residual weight mass
    weight_ccdf(n) drops below eps.

    When |term(n)| is bounded by the weight mass at n (true for the load sums,
    where terms are PMF values times coverage factors <= 1), the returned value
    undercounts the full series by at most eps.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    total = 0.0
    n = start
    while True:
        total += term(n)
        if weight_ccdf(n) < eps:
            return total
        n += 1
        if n - start > max_terms:
            raise ConvergenceError(f"series tail above {eps} after {max_terms} terms")
