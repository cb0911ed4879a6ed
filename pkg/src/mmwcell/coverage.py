"""SNR, INR, and SINR distributions for the typical link.

SNR coverage is closed-form in the path-loss intensity measure.  The
interference-to-noise ratio is upper bounded by the total received power,
a shot noise over the path-loss process whose Laplace functional is
evaluated by quadrature and inverted numerically.  SINR coverage comes in
two flavours: an exact-but-expensive conditional-inversion path and the
Rayleigh-fading form that reduces to a double quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gamma as gamma_fn
from numpy.polynomial.legendre import leggauss

from . import load as load_mod
from .numerics import (DEFAULT_INVERSION, InversionConfig, LognormalParams,
                       integrate_adaptive, invert_laplace_ccdf)
from .propagation import (PropagationModel, normalized_measure,
                          path_loss_quantile, quadrature_hints,
                          scalar_density_fn, scalar_measure_fn)

__all__ = [
    "LinkKind",
    "RadioConfig",
    "FpcParams",
    "InterfererGainDist",
    "snr_coverage",
    "uplink_fpc_coverage",
    "total_power_transform",
    "inr_bound_ccdf",
    "inr_uniform_closed_form",
    "sinr_coverage",
]


class LinkKind(str, Enum):
    DOWNLINK = "downlink"
    UPLINK = "uplink"
    BACKHAUL = "backhaul"


@dataclass(frozen=True)
class RadioConfig:
    """Transmit powers, bandwidth, sectorized antenna pattern, and noise.
    All powers and gains are linear (mW / ratios); use from_db for the usual
    dBm/dB parameterization."""

    p_bs_mw: float
    p_ue_mw: float
    bandwidth_hz: float
    g_max: float
    g_min: float
    beamwidth_rad: float
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 10.0
    carrier_hz: float = 73e9

    def __post_init__(self):
        if self.p_bs_mw <= 0 or self.p_ue_mw <= 0:
            raise ValueError("transmit powers must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if not (self.g_max >= self.g_min > 0):
            raise ValueError("need g_max >= g_min > 0")
        if not 0.0 < self.beamwidth_rad < 2.0 * math.pi:
            raise ValueError("beamwidth must lie in (0, 2*pi)")

    @classmethod
    def from_db(cls, *, p_bs_dbm=30.0, p_ue_dbm=20.0, bandwidth_hz=2e9,
                g_max_db=18.0, g_min_db=-2.0, beamwidth_deg=10.0,
                noise_psd_dbm_hz=-174.0, noise_figure_db=10.0,
                carrier_hz=73e9) -> "RadioConfig":
        return cls(
            p_bs_mw=10.0 ** (p_bs_dbm / 10.0),
            p_ue_mw=10.0 ** (p_ue_dbm / 10.0),
            bandwidth_hz=bandwidth_hz,
            g_max=10.0 ** (g_max_db / 10.0),
            g_min=10.0 ** (g_min_db / 10.0),
            beamwidth_rad=math.radians(beamwidth_deg),
            noise_psd_dbm_hz=noise_psd_dbm_hz,
            noise_figure_db=noise_figure_db,
            carrier_hz=carrier_hz,
        )

    @property
    def noise_mw(self) -> float:
        """Thermal noise power over the full band, including the noise figure."""
        dbm = self.noise_psd_dbm_hz + 10.0 * math.log10(self.bandwidth_hz) \
            + self.noise_figure_db
        return 10.0 ** (dbm / 10.0)

    def tx_power_mw(self, kind: LinkKind) -> float:
        return self.p_ue_mw if kind == LinkKind.UPLINK else self.p_bs_mw

    def desired_gain(self, kind: LinkKind) -> float:
        """Aligned-beam gain of the wanted link: G_max on access links (omni
        users), G_max^2 on the BS-to-BS backhaul."""
        return self.g_max**2 if kind == LinkKind.BACKHAUL else self.g_max


@dataclass(frozen=True)
class FpcParams:
    """Uplink fractional power control: transmit power p0 * L^epsilon."""

    p0_mw: float
    epsilon: float

    def __post_init__(self):
        if self.p0_mw <= 0:
            raise ValueError("open-loop power must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("power control fraction must lie in [0, 1)")


@dataclass(frozen=True)
class InterfererGainDist:
    """Discrete law of the combined antenna gain on an interfering link."""

    gains: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.gains) != len(self.probs) or not self.gains:
            raise ValueError("gains and probs must be nonempty, equal length")
        if any(g < 0 for g in self.gains) or any(p < 0 for p in self.probs):
            raise ValueError("gains and probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def moment(self, p: float) -> float:
        return sum(pr * (g**p if g > 0 else 0.0)
                   for g, pr in zip(self.gains, self.probs))

    @staticmethod
    def access(radio: RadioConfig) -> "InterfererGainDist":
        """Interferer gain towards an omni user: mainlobe with probability
        beamwidth/2pi (randomly oriented beams), sidelobe otherwise."""
        q = radio.beamwidth_rad / (2.0 * math.pi)
        return InterfererGainDist((radio.g_max, radio.g_min), (q, 1.0 - q))

    @staticmethod
    def backhaul(radio: RadioConfig) -> "InterfererGainDist":
        """Both ends beamformed: product of two independent mainlobe draws."""
        q = radio.beamwidth_rad / (2.0 * math.pi)
        return InterfererGainDist(
            (radio.g_max**2, radio.g_max * radio.g_min, radio.g_min**2),
            (q * q, 2.0 * q * (1.0 - q), (1.0 - q) ** 2),
        )

    @staticmethod
    def for_kind(radio: RadioConfig, kind: LinkKind) -> "InterfererGainDist":
        if kind == LinkKind.BACKHAUL:
            return InterfererGainDist.backhaul(radio)
        return InterfererGainDist.access(radio)

    @staticmethod
    def silent() -> "InterfererGainDist":
        """Zero-gain interferers; turns interference off in the analysis."""
        return InterfererGainDist((0.0,), (1.0,))


def _coverage_from_argument(model: PropagationModel, arg):
    # P(L(X*) < arg) = 1 - exp(-Lambda(arg)); arg is the path-loss budget
    return 1.0 - np.exp(-model.density * normalized_measure(model, arg))


def snr_coverage(model: PropagationModel, radio: RadioConfig, kind: LinkKind, tau):
    """P(SNR > tau) for the typical link of the given kind.

    `model` must be the propagation process matching the kind: the access
    process for downlink/uplink, the A-BS process (density lambda*omega,
    backhaul link class) for backhaul.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0.0):
        raise ValueError("SNR threshold tau must be positive (linear scale)")
    p = radio.tx_power_mw(kind) * radio.desired_gain(kind)
    out = _coverage_from_argument(model, p / (tau * radio.noise_mw))
    return out if out.ndim else float(out)


def uplink_fpc_coverage(model: PropagationModel, radio: RadioConfig,
                        fpc: FpcParams, tau):
    """Uplink SNR coverage under fractional power control p0 * L^epsilon:
    P(SNR > tau) = 1 - exp(-Lambda((p0 G / (tau sigma^2))^{1/(1-eps)}))."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0.0):
        raise ValueError("SNR threshold tau must be positive (linear scale)")
    base = fpc.p0_mw * radio.g_max / (tau * radio.noise_mw)
    out = _coverage_from_argument(model, base ** (1.0 / (1.0 - fpc.epsilon)))
    return out if out.ndim else float(out)


def _one_minus_exp(x: complex) -> complex:
    """1 - exp(-x), accurate for small |x|."""
    if abs(x) < 1e-4:
        return x * (1.0 - x * (0.5 - x / 6.0))
    return 1.0 - cmath.exp(-x)


def _shot_noise_exponent_fn(model: PropagationModel):
    """Returns g(w) = int_0^inf (1 - e^{-w v}) h(v) dv for complex w with
    Re w > 0, where h(v) = M'(1/v)/v^2 is the density of inverse path loss.

    Damping kills the integrand beyond v ~ 40/Re(w); past the cutoff the
    bracket is 1 to machine precision and the tail integrates exactly to
    M(1/v_cut).
    """
    mprime = scalar_density_fn(model)
    measure = scalar_measure_fn(model)
    hints_v = sorted(1.0 / t for t in quadrature_hints(model))

    def g(w: complex) -> complex:
        re_w = w.real
        if re_w <= 0.0:
            raise ValueError("shot-noise exponent needs Re(w) > 0")
        v_hi = 40.0 / re_w

        def integrand(v):
            return _one_minus_exp(w * v) * mprime(1.0 / v) / (v * v)

        val = integrate_adaptive(integrand, 0.0, v_hi,
                                 points=[v for v in hints_v if v < v_hi],
                                 rel_tol=1e-9, abs_tol=1e-30, limit=400,
                                 complex_valued=True)
        return val + measure(1.0 / v_hi)

    return g


def total_power_transform(model: PropagationModel, radio: RadioConfig, *,
                          kind: LinkKind = LinkKind.DOWNLINK,
                          gains: InterfererGainDist | None = None,
                          interferer_density: float | None = None):
    """Laplace transform z -> E[exp(-z I_t / sigma^2)] of the total received
    power over noise, I_t = sum_Y K_Y / L_Y with marks K = P * psi.

    The uplink variant models one interfering user per BS as an independent
    process of the BS density with marks P_ue * psi.
    """
    gains = gains or InterfererGainDist.for_kind(radio, kind)
    power = radio.tx_power_mw(kind)
    lam = interferer_density if interferer_density is not None else model.density
    noise = radio.noise_mw
    shot = _shot_noise_exponent_fn(model)
    marks = [(pr, power * g) for g, pr in zip(gains.gains, gains.probs)
             if pr > 0.0 and g > 0.0]

    def transform(z: complex) -> complex:
        s = complex(z) / noise
        expo = 0.0j
        for pr, k in marks:
            expo += pr * shot(s * k)
        return cmath.exp(-lam * expo)

    return transform


def inr_bound_ccdf(model: PropagationModel, radio: RadioConfig, y, *,
                   kind: LinkKind = LinkKind.DOWNLINK,
                   gains: InterfererGainDist | None = None,
                   cfg: InversionConfig | None = None,
                   interferer_density: float | None = None) -> float:
    """Upper bound on P(INR > y): the CCDF of total received power over noise,
    recovered from its Laplace transform by Euler inversion."""
    y = float(y)
    if y <= 0.0:
        raise ValueError("INR threshold y must be positive")
    lt = total_power_transform(model, radio, kind=kind, gains=gains,
                               interferer_density=interferer_density)

    def ccdf_transform(z):
        return (1.0 - lt(z)) / z

    return invert_laplace_ccdf(ccdf_transform, y, cfg or DEFAULT_INVERSION)


def inr_uniform_closed_form(alpha: float, shadow: LognormalParams,
                            radio: RadioConfig, gains: InterfererGainDist,
                            density: float, *, power_mw: float | None = None):
    """Closed-form transform of I_t/sigma^2 when every link shares one path
    loss exponent alpha > 2 and one shadowing law:

        L(z) = exp(2 pi (lam/alpha) z^{2/a} P^{2/a} E[S^{2/a}] E[psi^{2/a}]
               * Gamma(-2/alpha)).

    The exponent scales as lam / (sigma^2)^{2/alpha}, which is the
    density-directivity-bandwidth-frequency equivalence: scaling
    (lam, B) -> (c lam, c^{alpha/2} B) leaves the transform unchanged.
    """
    if alpha <= 2.0:
        raise ValueError("closed form needs alpha > 2")
    power = radio.p_bs_mw if power_mw is None else power_mw
    n = 2.0 / alpha
    coef = (2.0 * math.pi * density / alpha) * power**n * shadow.moment(n) \
        * gains.moment(n) * gamma_fn(-n)

    noise = radio.noise_mw

    def transform(z: complex) -> complex:
        return cmath.exp(coef * (complex(z) / noise) ** n)

    return transform


def _activity_factor(user_density: float, bs_density: float) -> float:
    """Probability a BS has at least one associated user."""
    return 1.0 - float(load_mod.typical_pmf(user_density, bs_density, 0))


def sinr_coverage(model: PropagationModel, radio: RadioConfig, kind: LinkKind,
                  tau, *, fading: str = "rayleigh",
                  gains: InterfererGainDist | None = None,
                  activity_thinning: bool = False,
                  user_density: float | None = None,
                  cfg: InversionConfig | None = None,
                  interferer_density: float | None = None,
                  nodes: int = 48) -> float:
    """P(SINR > tau) for the typical link.

    fading="rayleigh": every link carries an independent unit-mean exponential
    power gain; the coverage reduces to an outer quadrature over the serving
    path loss and an inner quadrature of the interference exponent.

    fading="none": conditional CDF of the normalized interference recovered
    by Laplace inversion inside the outer integral.  Much slower; kept off
    the default analysis paths.

    activity_thinning multiplies the interferer density by the probability
    that a BS has at least one user (requires user_density).
    """
    tau = float(tau)
    if tau <= 0.0:
        raise ValueError("SINR threshold tau must be positive")
    if fading not in ("rayleigh", "none"):
        raise ValueError("fading must be 'rayleigh' or 'none'")
    gains = gains or InterfererGainDist.for_kind(radio, kind)
    power = radio.tx_power_mw(kind)
    g_des = radio.desired_gain(kind)
    noise = radio.noise_mw
    lam = model.density
    lam_i = interferer_density if interferer_density is not None else lam
    if activity_thinning:
        if user_density is None:
            raise ValueError("activity_thinning requires user_density")
        lam_i *= _activity_factor(user_density, model.density)

    measure = scalar_measure_fn(model)
    mprime = scalar_density_fn(model)
    hints = quadrature_hints(model)
    atoms = [(pr, g) for g, pr in zip(gains.gains, gains.probs) if pr > 0.0]

    if fading == "rayleigh":
        return _sinr_rayleigh(tau, power, g_des, noise, lam, lam_i, atoms,
                              measure, mprime, hints, model)
    # the conditional transforms carry inner-quadrature noise around 1e-7,
    # so the inversion tolerance must sit above it
    no_fading_cfg = cfg or InversionConfig(rel_tol=1e-6)
    return _sinr_no_fading(tau, power, g_des, noise, lam, lam_i, atoms,
                           measure, mprime, model, no_fading_cfg, nodes)


def _power_law_terms(model: PropagationModel):
    """When the LOS probability does not depend on distance the measure is a
    pure sum of power laws M(t) = sum_j coef_j t^{n_j}; returns the
    (coef, exponent) pairs, or None when the ball matters."""
    b = model.blockage
    if b.c_inside != b.c_beyond:
        return None
    terms = []
    for los, c in ((True, b.c_inside), (False, 1.0 - b.c_inside)):
        if c <= 0.0:
            continue
        alpha = model.link.exponent(los)
        n = 2.0 / alpha
        terms.append((math.pi * c * model.link.shadow(los).moment(n), n))
    return terms


def _sinr_rayleigh(tau, power, g_des, noise, lam, lam_i, atoms, measure,
                   mprime, hints, model):
    # P = lam * int exp(-c0 l - lam M(l) + lam_i M(l) E[z/(1+z)]
    #                   - lam_i E[int_0^{z/(1+z)} M(z l (1/u - 1)) du]) M'(l) dl
    # with z = tau * psi / G_des per interferer-gain atom.
    from scipy.special import betainc, beta as beta_fn

    c0 = tau * noise / (power * g_des)
    zs = [(pr, tau * g / g_des) for pr, g in atoms]
    e_inv = sum(pr / (1.0 + z) for pr, z in zs) + (1.0 - sum(pr for pr, _ in zs))
    # atoms with z == 0 contribute 1/(1+0); silent atoms already folded in

    l_hi = path_loss_quantile(model, 1e-12)
    power_terms = _power_law_terms(model)

    if power_terms is not None:
        # int_0^{u*} (1/u - 1)^n du is an incomplete beta; no inner quadrature
        consts = [(coef, n, beta_fn(1.0 - n, 1.0 + n)) for coef, n in power_terms]

        def inner(l: float) -> float:
            total = 0.0
            for pr, z in zs:
                if z <= 0.0:
                    continue
                u_hi = z / (1.0 + z)
                for coef, n, bfull in consts:
                    frac = betainc(1.0 - n, 1.0 + n, u_hi)
                    total += pr * coef * (z * l) ** n * bfull * frac
            return total
    else:
        def inner(l: float) -> float:
            total = 0.0
            for pr, z in zs:
                if z <= 0.0:
                    continue
                u_hi = z / (1.0 + z)
                # split where the M argument crosses the measure's own hints
                pts = [u_hi / (1.0 + t / (z * l)) for t in hints]
                val = integrate_adaptive(lambda u: measure(z * l * (1.0 / u - 1.0)),
                                         0.0, u_hi, points=pts,
                                         rel_tol=1e-8, abs_tol=1e-30, limit=300)
                total += pr * val
            return total

    def integrand(l: float) -> float:
        m_l = measure(l)
        expo = -c0 * l - lam * m_l + lam_i * m_l * (1.0 - e_inv) - lam_i * inner(l)
        return math.exp(expo) * lam * mprime(l)

    val = integrate_adaptive(integrand, 0.0, l_hi, points=hints,
                             rel_tol=1e-7, abs_tol=1e-12, limit=300)
    return min(1.0, max(0.0, float(val)))


def _sinr_no_fading(tau, power, g_des, noise, lam, lam_i, atoms, measure,
                    mprime, model, cfg, nodes):
    # Outer integral over the serving-link CDF level; at each node the
    # conditional CDF of J = (l/G) sum psi_X / L_X is inverted from its
    # Laplace transform on (l, inf).
    from scipy.optimize import brentq

    l_max = power * g_des / (tau * noise)
    p_max = 1.0 - math.exp(-lam * measure(l_max))
    if p_max <= 0.0:
        return 0.0
    x_nodes, weights = leggauss(nodes)
    levels = 0.5 * p_max * (x_nodes + 1.0)
    weights = 0.5 * p_max * weights

    hints_v = sorted(1.0 / t for t in quadrature_hints(model))

    def quantile(cdf_level: float) -> float:
        target = -math.log1p(-cdf_level)

        def g(log_t):
            return lam * measure(math.exp(log_t)) - target

        lo, hi = 0.0, 1.0
        while g(lo) > 0.0:
            lo -= 10.0
        while g(hi) < 0.0:
            hi += 10.0
        return math.exp(brentq(g, lo, hi, xtol=1e-9, rtol=1e-11))

    def conditional_cdf(l: float, x: float) -> float:
        if x <= 0.0:
            return 0.0

        def transform(zeta: complex) -> complex:
            expo = 0.0j
            for pr, g in atoms:
                if g <= 0.0:
                    continue
                w = zeta * l * (g / g_des)
                v_hi = min(1.0 / l, 40.0 / w.real)

                def integrand(v):
                    return _one_minus_exp(w * v) * mprime(1.0 / v) / (v * v)

                val = integrate_adaptive(
                    integrand, 0.0, v_hi,
                    points=[v for v in hints_v if v < v_hi],
                    rel_tol=1e-7, abs_tol=1e-30, limit=200,
                    complex_valued=True)
                if v_hi < 1.0 / l:
                    val += measure(1.0 / v_hi) - measure(l)
                expo += pr * val
            laplace = cmath.exp(-lam_i * expo)
            return (1.0 - laplace) / zeta

        return 1.0 - invert_laplace_ccdf(transform, x, cfg)

    total = 0.0
    for lvl, wgt in zip(levels, weights):
        l = quantile(lvl)
        total += wgt * conditional_cdf(l, 1.0 / tau - noise * l / (power * g_des))
    return min(1.0, max(0.0, total))
