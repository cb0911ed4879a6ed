"""Path-loss point process for blockage-and-shadowing-aware mmWave links.

The path-loss values L = d^alpha / S seen from a reference point form a
Poisson process on the positive reals whose intensity measure Lambda((0, t])
has a closed form in Gaussian tails and truncated lognormal moments.  This
module evaluates that measure, its density, and the tagged-link (minimum)
path-loss distribution.  Path loss is handled in linear scale throughout;
dB only enters through the parameter constructors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .numerics import LognormalParams, gaussian_pdf, q_function

__all__ = [
    "LinkClassParams",
    "BlockageParams",
    "PropagationModel",
    "intensity_measure",
    "intensity_density",
    "normalized_measure",
    "normalized_density",
    "quadrature_hints",
    "path_loss_ccdf",
    "path_loss_pdf",
    "path_loss_quantile",
]


@dataclass(frozen=True)
class LinkClassParams:
    """Per-link-class propagation parameters (access or backhaul).

    alpha_* are path loss exponents, xi_* shadowing standard deviations in dB,
    beta_db the reference loss at 1 m.  LOS and NLOS each get their own
    exponent and shadowing spread.
    """

    alpha_los: float
    alpha_nlos: float
    xi_los: float
    xi_nlos: float
    beta_db: float

    def __post_init__(self):
        if self.alpha_los <= 0 or self.alpha_nlos <= 0:
            raise ValueError("path loss exponents must be positive")
        if self.xi_los < 0 or self.xi_nlos < 0:
            raise ValueError("shadowing std must be >= 0")

    def shadow(self, los: bool) -> LognormalParams:
        """Lognormal law of the linear gain S for the given blockage state."""
        return LognormalParams.from_db(self.beta_db, self.xi_los if los else self.xi_nlos)

    def exponent(self, los: bool) -> float:
        return self.alpha_los if los else self.alpha_nlos


@dataclass(frozen=True)
class BlockageParams:
    """LOS-ball blockage: a link of length d is LOS with probability c_inside
    if d <= d_ball and c_beyond otherwise (c_beyond defaults to 0)."""

    c_inside: float
    d_ball: float
    c_beyond: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.c_beyond <= self.c_inside <= 1.0):
            raise ValueError("need 0 <= c_beyond <= c_inside <= 1")
        if not self.d_ball > 0.0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class PropagationModel:
    """One transmitter class seen from a reference receiver: link parameters,
    blockage, and transmitter density (per square meter).  Immutable; all
    operations on it are pure."""

    link: LinkClassParams
    blockage: BlockageParams
    density: float

    def __post_init__(self):
        if not self.density > 0.0:
            raise ValueError("density must be positive")

    def with_density(self, density: float) -> "PropagationModel":
        return replace(self, density=density)


def _gauss_ccdf_scaled(num, sigma):
    """Q(num / sigma), with the sigma = 0 limit handled as a step function."""
    num = np.asarray(num, dtype=float)
    if sigma > 0.0:
        return q_function(num / sigma)
    return np.where(num > 0.0, 0.0, np.where(num < 0.0, 1.0, 0.5))


def _pdf_over_sigma(num, sigma):
    """phi(num / sigma) / sigma, zero in the deterministic limit (the measure
    then has an atom that a pointwise density cannot represent)."""
    num = np.asarray(num, dtype=float)
    if sigma > 0.0:
        return gaussian_pdf(num / sigma) / sigma
    return np.zeros_like(num)


def _class_weights(b: BlockageParams):
    # (inside-ball, beyond-ball) LOS/NLOS mixture weights
    return (
        (b.c_inside, b.c_beyond),          # LOS
        (1.0 - b.c_inside, 1.0 - b.c_beyond),  # NLOS
    )


def normalized_measure(model: PropagationModel, t):
    """M(t) = Lambda((0, t]) / density.  Independent of density by construction.

    General two-region form: for each blockage class j with weight c_in inside
    the ball and c_out beyond it,

        M_j(t) = pi * [ (c_in - c_out) D^2 Fbar_Sj(D^a/t)
                        + t^{2/a} (c_in zl_j(D^a/t) + c_out zu_j(D^a/t)) ],

    with Fbar the lognormal CCDF and zl/zu the lower/upper truncated 2/a-th
    moments of the shadowing gain.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("path loss threshold t must be positive")
    D = model.blockage.d_ball
    total = np.zeros(np.shape(t))
    for los, (c_in, c_out) in zip((True, False), _class_weights(model.blockage)):
        alpha = model.link.exponent(los)
        p = model.link.shadow(los)
        n = 2.0 / alpha
        ln_x = alpha * math.log(D) - np.log(t)  # ln(D^alpha / t)
        full = p.moment(n)
        ccdf = _gauss_ccdf_scaled(ln_x - p.m, p.sigma)
        lower = full * _gauss_ccdf_scaled(p.sigma**2 * n - ln_x + p.m, p.sigma)
        upper = full - lower
        total = total + (c_in - c_out) * D * D * ccdf \
            + np.power(t, n) * (c_in * lower + c_out * upper)
    return math.pi * total


def normalized_density(model: PropagationModel, t):
    """M'(t) = dM/dt, the density of the normalized intensity measure.

    Closed form obtained by differentiating normalized_measure term by term;
    nonnegative everywhere.  With sigma = 0 and a blockage split the measure
    has an atom at t = D^alpha e^{-m} which a pointwise density cannot carry;
    the absolutely continuous part is returned.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("path loss threshold t must be positive")
    D = model.blockage.d_ball
    total = np.zeros(np.shape(t))
    for los, (c_in, c_out) in zip((True, False), _class_weights(model.blockage)):
        alpha = model.link.exponent(los)
        p = model.link.shadow(los)
        n = 2.0 / alpha
        dc = c_in - c_out
        ln_x = alpha * math.log(D) - np.log(t)
        full = p.moment(n)
        y = p.sigma**2 * n - ln_x + p.m
        q_low = _gauss_ccdf_scaled(y, p.sigma)
        ball_term = dc * D * D * _pdf_over_sigma(ln_x - p.m, p.sigma) / t
        moment_term = full * np.power(t, n - 1.0) * (
            n * (c_out + dc * q_low) - dc * _pdf_over_sigma(y, p.sigma)
        )
        total = total + ball_term + moment_term
    return math.pi * total


def intensity_measure(model: PropagationModel, t):
    """Lambda((0, t]): expected number of transmitters with path loss <= t."""
    return model.density * normalized_measure(model, t)


def intensity_density(model: PropagationModel, t):
    """Density of the intensity measure, density * M'(t)."""
    return model.density * normalized_density(model, t)


def quadrature_hints(model: PropagationModel) -> tuple[float, ...]:
    """Path-loss values where M' changes character, exported so downstream
    quadrature can split there: the bare ball radii D^alpha and the
    shadowing-shifted transition midpoints D^alpha e^{-m} where the Gaussian
    tails cross 1/2."""
    D = model.blockage.d_ball
    hints = set()
    for los in (True, False):
        alpha = model.link.exponent(los)
        m = model.link.shadow(los).m
        hints.add(D**alpha)
        hints.add(D**alpha * math.exp(-m))
    return tuple(sorted(hints))


def _class_constants(model: PropagationModel):
    out = []
    D = model.blockage.d_ball
    for los, (c_in, c_out) in zip((True, False), _class_weights(model.blockage)):
        alpha = model.link.exponent(los)
        p = model.link.shadow(los)
        n = 2.0 / alpha
        out.append((n, p.m, p.sigma, p.moment(n), c_in - c_out, c_out,
                    alpha * math.log(D)))
    return D * D, out


def scalar_measure_fn(model: PropagationModel):
    """Fast scalar-argument closure for M(t), for quadrature inner loops where
    numpy dispatch overhead dominates.  Mirrors normalized_measure exactly."""
    d2, classes = _class_constants(model)
    erfc, log = math.erfc, math.log
    s2 = math.sqrt(2.0)

    def measure(t: float) -> float:
        lt = log(t)
        total = 0.0
        for n, m, sigma, full, dc, c_out, ln_da in classes:
            ln_x = ln_da - lt
            if sigma > 0.0:
                ccdf = 0.5 * erfc((ln_x - m) / (sigma * s2))
                q_low = 0.5 * erfc((sigma * sigma * n - ln_x + m) / (sigma * s2))
            else:
                ccdf = 1.0 if ln_x < m else (0.0 if ln_x > m else 0.5)
                q_low = 1.0 - ccdf
            lower = full * q_low
            total += dc * d2 * ccdf + t**n * (c_out * full + dc * lower)
        return math.pi * total

    return measure


def scalar_density_fn(model: PropagationModel):
    """Fast scalar-argument closure for M'(t); mirrors normalized_density."""
    d2, classes = _class_constants(model)
    erfc, log, exp = math.erfc, math.log, math.exp
    s2 = math.sqrt(2.0)
    s2pi = math.sqrt(2.0 * math.pi)

    def density(t: float) -> float:
        lt = log(t)
        total = 0.0
        for n, m, sigma, full, dc, c_out, ln_da in classes:
            ln_x = ln_da - lt
            if sigma > 0.0:
                w = (ln_x - m) / sigma
                y = (sigma * sigma * n - ln_x + m) / sigma
                q_low = 0.5 * erfc(y / s2)
                ball = dc * d2 * exp(-0.5 * w * w) / (s2pi * sigma * t)
                mom = full * t ** (n - 1.0) * (
                    n * (c_out + dc * q_low) - dc * exp(-0.5 * y * y) / (s2pi * sigma)
                )
            else:
                q_low = 1.0 if m - ln_x < 0 else (0.0 if m - ln_x > 0 else 0.5)
                ball = 0.0
                mom = full * t ** (n - 1.0) * n * (c_out + dc * q_low)
            total += ball + mom
        return math.pi * total

    return density


def path_loss_ccdf(model: PropagationModel, t):
    """P(L(X*) > t) = exp(-Lambda((0, t])): no transmitter beats path loss t."""
    return np.exp(-intensity_measure(model, t))


def path_loss_pdf(model: PropagationModel, t):
    """Density of the tagged-link (minimum) path loss,
    f(l) = density * M'(l) * exp(-density * M(l)); integrates to 1."""
    lam = model.density
    return lam * normalized_density(model, t) * np.exp(-lam * normalized_measure(model, t))


def path_loss_quantile(model: PropagationModel, ccdf_level: float) -> float:
    """The t at which the tagged-link CCDF equals ccdf_level (0 < level < 1).
    Used to bound quadrature ranges over the path-loss density."""
    if not 0.0 < ccdf_level < 1.0:
        raise ValueError("ccdf_level must lie in (0, 1)")
    target = -math.log(ccdf_level)  # Lambda(t) at the quantile

    def g(log_t):
        return float(intensity_measure(model, math.exp(log_t))) - target

    lo, hi = 0.0, 1.0
    while g(lo) > 0.0:
        lo -= 10.0
        if lo < -400.0:
            raise ValueError("quantile bracket underflow")
    while g(hi) < 0.0:
        hi += 10.0
        if hi > 400.0:
            raise ValueError("quantile bracket overflow")
    return math.exp(brentq(g, lo, hi, xtol=1e-10, rtol=1e-12))
