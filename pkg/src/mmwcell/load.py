"""Association-cell load distributions.

User and BS counts per serving node follow the gamma-approximated
Poisson-Voronoi cell-area law with shape 3.5.  The typical cell gives the
count seen by a randomly chosen server; the tagged cell (the one containing
a random user) is its size-biased version and always holds at least the
tagged node itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConvergenceError

# Shape of the gamma fit to the normalized Poisson-Voronoi cell area.
VORONOI_SHAPE = 3.5

# Mean-area ratio of the size-biased (tagged) cell over the typical cell,
# E[A^2]/E[A]^2 = 1 + 1/shape = 9/7.  Commonly printed rounded to 1.28;
# the exact value is what the PMFs below actually integrate to.
SIZE_BIAS = 1.0 + 1.0 / VORONOI_SHAPE

_LOG_SHAPE = float(np.log(VORONOI_SHAPE))


@dataclass(frozen=True)
class LoadModel:
    """Densities driving the load laws: users (lambda_u), BSs (lambda), and
    the wired-backhaul fraction omega."""

    user_density: float
    bs_density: float
    abs_fraction: float

    def __post_init__(self):
        if self.user_density <= 0 or self.bs_density <= 0:
            raise ValueError("densities must be positive")
        if not 0.0 < self.abs_fraction <= 1.0:
            raise ValueError("abs_fraction must lie in (0, 1]")

    @property
    def kappa(self) -> float:
        """Mean users per BS, lambda_u / lambda."""
        return self.user_density / self.bs_density


def _check_densities(c, d):
    if c < 0 or d <= 0:
        raise ValueError(f"need c >= 0 and d > 0, got c={c}, d={d}")


def typical_pmf(c: float, d: float, n):
    """P(N = n) for the count of rate-c points in the typical cell of a
    rate-d tessellation; mean c/d.  Evaluated through log-gamma so it stays
    finite out to n ~ 1e5.  c = 0 degenerates to a point mass at 0."""
    _check_densities(c, d)
    n = np.asarray(n)
    if np.any(n != np.floor(n)):
        raise ValueError("n must be integer")
    nf = n.astype(float)
    r = c / d
    s = VORONOI_SHAPE
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r_part = np.where(nf > 0, nf * np.log(r) if r > 0 else -np.inf, 0.0)
    log_p = (
        s * _LOG_SHAPE
        + gammaln(nf + s)
        - gammaln(s)
        - gammaln(nf + 1.0)
        + log_r_part
        - (nf + s) * np.log(s + r)
    )
    out = np.where(nf >= 0, np.exp(log_p), 0.0)
    return out if out.ndim else float(out)


def tagged_pmf(c: float, d: float, n):
    """P(N = n) for the count in the tagged (size-biased) cell, n >= 1; the
    tagged point itself is included, so the mean is 1 + SIZE_BIAS * c/d.
    Returns 0 for n < 1."""
    _check_densities(c, d)
    n = np.asarray(n)
    if np.any(n != np.floor(n)):
        raise ValueError("n must be integer")
    nf = n.astype(float)
    r = c / d
    s = VORONOI_SHAPE
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r_part = np.where(nf > 1, (nf - 1.0) * np.log(r) if r > 0 else -np.inf, 0.0)
        log_p = (
            s * _LOG_SHAPE
            + gammaln(nf + s)
            - gammaln(s)
            - gammaln(np.maximum(nf, 1.0))  # (n-1)!
            + log_r_part
            - (nf + s) * np.log(s + r)
        )
    out = np.where(nf >= 1, np.exp(log_p), 0.0)
    return out if out.ndim else float(out)


def typical_mean(c: float, d: float) -> float:
    _check_densities(c, d)
    return c / d


def tagged_mean(c: float, d: float) -> float:
    _check_densities(c, d)
    return 1.0 + SIZE_BIAS * c / d


@dataclass(frozen=True)
class DiscreteDist:
    """A finitely supported discrete distribution: eps-truncated PMFs and the
    degenerate (point-mass) injections used in tests both travel as this."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if s.shape != p.shape or s.ndim != 1 or s.size == 0:
            raise ValueError("support and probs must be equal-length 1-D arrays")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "probs", p)

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    @property
    def mass(self) -> float:
        return float(np.sum(self.probs))

    @classmethod
    def point(cls, value: float) -> "DiscreteDist":
        return cls(np.array([float(value)]), np.array([1.0]))


def truncate_pmf(pmf, start: int, eps: float, *, max_n: int = 10**6) -> DiscreteDist:
    """Smallest support [start, N] of pmf whose tail mass is below eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    chunk = 256
    supports = []
    probs = []
    mass = 0.0
    lo = start
    while lo <= start + max_n:
        n = np.arange(lo, lo + chunk)
        p = pmf(n)
        csum = mass + np.cumsum(p)
        done = csum >= 1.0 - eps
        if np.any(done):
            k = int(np.argmax(done)) + 1
            supports.append(n[:k])
            probs.append(p[:k])
            return DiscreteDist(np.concatenate(supports), np.concatenate(probs))
        supports.append(n)
        probs.append(p)
        mass = float(csum[-1])
        lo += chunk
    raise ConvergenceError(f"PMF tail above {eps} after {max_n} terms")


def typical_load(c: float, d: float, eps: float = 1e-9) -> DiscreteDist:
    return truncate_pmf(lambda n: typical_pmf(c, d, n), 0, eps)


def tagged_load(c: float, d: float, eps: float = 1e-9) -> DiscreteDist:
    return truncate_pmf(lambda n: tagged_pmf(c, d, n), 1, eps)


@dataclass(frozen=True)
class LoadDists:
    """The three load variables entering the per-user rate, resolved for one
    association branch: users on the serving BS (n_u), users served directly
    by the relevant A-BS (n_uw), and BSs backhauled by it (n_b)."""

    n_u: DiscreteDist
    n_uw: DiscreteDist
    n_b: DiscreteDist
    association: str


def load_pmfs(model: LoadModel, association: str, eps: float = 1e-9) -> LoadDists:
    """Load laws for a user served by an A-BS ("abs") or by a wirelessly
    backhauled BS ("bs").

    abs branch: n_u = n_uw ~ tagged(lambda_u, lambda);
                n_b ~ typical(lambda(1-omega), lambda*omega).
    bs branch:  n_u ~ tagged(lambda_u, lambda);
                n_uw ~ typical(lambda_u, lambda);
                n_b ~ tagged(lambda(1-omega), lambda*omega).
    """
    lam_u, lam, w = model.user_density, model.bs_density, model.abs_fraction
    if association == "abs":
        users = tagged_load(lam_u, lam, eps)
        return LoadDists(n_u=users, n_uw=users,
                         n_b=typical_load(lam * (1.0 - w), lam * w, eps),
                         association=association)
    if association == "bs":
        return LoadDists(n_u=tagged_load(lam_u, lam, eps),
                         n_uw=typical_load(lam_u, lam, eps),
                         n_b=tagged_load(lam * (1.0 - w), lam * w, eps),
                         association=association)
    raise ValueError(f"association must be 'abs' or 'bs', got {association!r}")
