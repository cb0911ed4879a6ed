"""Rate distributions for the self-backhauled network.

A user served directly by a wired (anchor) BS shares that BS's band with its
other users and with the backhauled BSs; a user on a wireless BS additionally
rides the backhaul hop, and its rate is the smaller of the access and
backhaul shares.  Network-wide rate coverage follows by mixing the per-link
SNR coverage over the load laws, either exactly (nested truncated sums) or
with every load frozen at its mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .coverage import InterfererGainDist, LinkKind, RadioConfig, snr_coverage, sinr_coverage
from .errors import UnreachableTargetError
from .load import (SIZE_BIAS, DiscreteDist, LoadModel, tagged_load,
                   typical_load)
from .numerics import LognormalParams
from .propagation import BlockageParams, LinkClassParams, PropagationModel

_LN2 = math.log(2.0)

__all__ = [
    "RateConfig",
    "HybridConfig",
    "CcdfCurve",
    "RateLoadDists",
    "instantaneous_rate",
    "rate_coverage",
    "rate_coverage_meanload",
    "hybrid_rate_coverage",
    "make_uhf_coverage",
    "saturation_density",
    "median_rate_contour",
    "percentile_rate",
    "snr_threshold",
]


@dataclass(frozen=True)
class RateConfig:
    """Bandwidth, optional minimum-MCS SNR cutoff (linear; 0 disables), and
    the tail tolerance for the load sums."""

    bandwidth_hz: float
    min_mcs_snr: float = 0.0
    sum_eps: float = 1e-9

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if self.min_mcs_snr < 0:
            raise ValueError("min_mcs_snr must be >= 0 (linear)")
        if not 0.0 < self.sum_eps < 1.0:
            raise ValueError("sum_eps must lie in (0, 1)")


@dataclass(frozen=True)
class HybridConfig:
    """Co-existing UHF macro tier and the offload rule: users whose mmWave
    SNR falls below offload_threshold ride the UHF network instead."""

    uhf_density: float            # BSs per m^2
    uhf_bandwidth_hz: float
    uhf_alpha: float
    uhf_shadow: LognormalParams   # carries the UHF intercept and shadowing
    uhf_power_mw: float
    offload_threshold: float      # linear SNR

    def __post_init__(self):
        if min(self.uhf_density, self.uhf_bandwidth_hz, self.uhf_alpha,
               self.uhf_power_mw, self.offload_threshold) <= 0:
            raise ValueError("hybrid parameters must all be positive")


@dataclass(frozen=True)
class CcdfCurve:
    """A sampled complementary CDF: ascending thresholds, nonincreasing
    probabilities, optional confidence band, optional sample bookkeeping."""

    thresholds: np.ndarray
    probabilities: np.ndarray
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None
    n_samples: int | None = None
    n_skipped: int | None = None

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if t.shape != p.shape or t.ndim != 1 or t.size == 0:
            raise ValueError("thresholds and probabilities must match 1-D shapes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly ascending")
        if np.any(p < -1e-9) or np.any(p > 1.0 + 1e-9):
            raise ValueError("probabilities must lie in [0, 1]")
        if np.any(np.diff(p) > 1e-9):
            raise ValueError("CCDF probabilities must be nonincreasing")
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "probabilities", np.clip(p, 0.0, 1.0))
        for name in ("ci_low", "ci_high"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != t.shape:
                    raise ValueError(f"{name} must match thresholds")
                object.__setattr__(self, name, v)

    def percentile(self, level: float) -> float:
        """Threshold at which the CCDF crosses `level` (linear interpolation);
        clamped to the sampled range."""
        p, t = self.probabilities, self.thresholds
        if level >= p[0]:
            return float(t[0])
        if level <= p[-1]:
            return float(t[-1])
        return float(np.interp(level, p[::-1], t[::-1]))


def snr_threshold(x, min_snr: float = 0.0):
    """Spectral-efficiency inverse 2^x - 1, floored at the minimum-MCS SNR."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        thr = np.expm1(x * _LN2)
    return np.maximum(thr, min_snr)


def instantaneous_rate(loads, kappa: float, sinr_access, sinr_backhaul,
                       associated_to_abs, cfg: RateConfig):
    """Per-user rate under the proportional access/backhaul resource split.

    loads = (n_u, n_uw, n_b): users on the serving BS, users served directly
    by the governing A-BS, and BSs backhauled by it.  For a user on an A-BS
    the split leaves B/(n_uw + kappa*n_b) per user; behind a wireless BS the
    rate is the lesser of the access and backhaul shares, divided among the
    BS's n_u users.  With a minimum-MCS cutoff the corresponding leg drops
    to zero when its SINR is below cfg.min_mcs_snr.  Vectorized.
    """
    n_u, n_uw, n_b = (np.asarray(a, dtype=float) for a in loads)
    sa = np.asarray(sinr_access, dtype=float)
    sb = np.asarray(sinr_backhaul, dtype=float)
    on_abs = np.asarray(associated_to_abs, dtype=bool)

    if np.any(on_abs & (n_uw < 1)):
        raise ValueError("A-BS branch requires n_uw >= 1")
    if np.any(~on_abs & ((n_u < 1) | (n_b < 1))):
        raise ValueError("BS branch requires n_u >= 1 and n_b >= 1")
    if np.any(sa <= 0) or np.any(~on_abs & (sb <= 0)):
        raise ValueError("SINRs must be positive")

    tau0 = cfg.min_mcs_snr
    se_a = np.where(sa >= tau0, np.log2(1.0 + sa), 0.0)
    se_b = np.where(sb >= tau0, np.log2(1.0 + sb), 0.0)

    denom = kappa * n_b + n_uw
    safe_denom = np.where(denom > 0, denom, 1.0)
    abs_rate = cfg.bandwidth_hz / np.where(on_abs, safe_denom, 1.0) * se_a
    share_b = kappa / safe_denom
    safe_nu = np.where(n_u >= 1, n_u, 1.0)
    bs_rate = cfg.bandwidth_hz / safe_nu * np.minimum((1.0 - share_b) * se_a,
                                                      share_b * se_b)
    out = np.where(on_abs, abs_rate, bs_rate)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RateLoadDists:
    """Truncated load laws entering the rate-coverage sums, one per index."""

    abs_bs: DiscreteDist       # BSs on the tagged A-BS, user served by an A-BS
    abs_users: DiscreteDist    # users on the tagged A-BS (includes the user)
    bs_users: DiscreteDist     # users on the tagged wireless BS
    bs_bs: DiscreteDist        # BSs on the governing A-BS (includes the BS)
    bs_abs_users: DiscreteDist # users served directly by that A-BS

    @classmethod
    def truncated(cls, loads: LoadModel, eps: float) -> "RateLoadDists":
        lam_u, lam, w = loads.user_density, loads.bs_density, loads.abs_fraction
        # two-index sum gets eps/2 per index, three-index sum eps/3; missing
        # mass multiplies coverage factors <= 1, so the budgets add.
        return cls(
            abs_bs=typical_load(lam * (1 - w), lam * w, eps / 2),
            abs_users=tagged_load(lam_u, lam, eps / 2),
            bs_users=tagged_load(lam_u, lam, eps / 3),
            bs_bs=tagged_load(lam * (1 - w), lam * w, eps / 3),
            bs_abs_users=typical_load(lam_u, lam, eps / 3),
        )

    @classmethod
    def at_means(cls, loads: LoadModel) -> "RateLoadDists":
        """Degenerate injection: every load frozen at its mean.  Feeding this
        through the exact sum must reproduce the mean-load closed form."""
        lam_u, lam, w = loads.user_density, loads.bs_density, loads.abs_fraction
        kappa = loads.kappa
        point = DiscreteDist.point
        return cls(
            abs_bs=point((1 - w) / w),
            abs_users=point(1.0 + SIZE_BIAS * kappa),
            bs_users=point(1.0 + SIZE_BIAS * kappa),
            bs_bs=point(1.0 + SIZE_BIAS * (1 - w) / w),
            bs_abs_users=point(kappa),
        )


def _coverage_evaluator(model: PropagationModel, radio: RadioConfig,
                        kind: LinkKind):
    """SNR coverage as a total function of the threshold: 1 at thr <= 0
    (always covered), 0 at thr = inf."""

    def evaluate(thr):
        thr = np.asarray(thr, dtype=float)
        out = np.ones(thr.shape)
        pos = (thr > 0) & np.isfinite(thr)
        if np.any(pos):
            out[pos] = snr_coverage(model, radio, kind, thr[pos])
        out[np.isinf(thr)] = 0.0
        return out

    return evaluate


def _access_kind(link: str) -> LinkKind:
    if link == "downlink":
        return LinkKind.DOWNLINK
    if link == "uplink":
        return LinkKind.UPLINK
    raise ValueError(f"link must be 'downlink' or 'uplink', got {link!r}")


def rate_coverage(prop_access: PropagationModel, prop_backhaul: PropagationModel,
                  radio: RadioConfig, loads: LoadModel, cfg: RateConfig,
                  rho: float, *, link: str = "downlink",
                  dists: RateLoadDists | None = None) -> float:
    """Exact-sum rate coverage P(Rate > rho).

    Structure: with probability omega the user sits on an A-BS and needs
    SNR_access above the threshold set by its share of the band; otherwise a
    triple sum over (bs users, A-BS tenants, A-BS direct users) couples the
    access and backhaul coverage factors.  The degenerate tenant index
    (n_b = 1 with no direct users) starves the access share and contributes
    zero for any rho > 0.
    """
    if rho < 0:
        raise ValueError("rate threshold rho must be >= 0")
    kind = _access_kind(link)
    s_a = _coverage_evaluator(prop_access, radio, kind)
    s_b = _coverage_evaluator(prop_backhaul, radio, LinkKind.BACKHAUL)
    w = loads.abs_fraction
    kappa = loads.kappa
    rho_hat = rho / cfg.bandwidth_hz
    tau0 = cfg.min_mcs_snr
    d = dists or RateLoadDists.truncated(loads, cfg.sum_eps)

    total = 0.0
    if w > 0.0:
        n = d.abs_bs.support[:, None]
        m = d.abs_users.support[None, :]
        weight = d.abs_bs.probs[:, None] * d.abs_users.probs[None, :]
        thr = snr_threshold(rho_hat * (kappa * n + m), tau0)
        total += w * float(np.sum(weight * s_a(thr)))
    if w < 1.0:
        l = d.bs_users.support[:, None, None]
        n = d.bs_bs.support[None, :, None]
        m = d.bs_abs_users.support[None, None, :]
        weight = (d.bs_users.probs[:, None, None]
                  * d.bs_bs.probs[None, :, None]
                  * d.bs_abs_users.probs[None, None, :])
        q = n + m / kappa
        x_b = rho_hat * l * q
        if rho_hat == 0.0:
            x_a = np.zeros(np.broadcast_shapes(l.shape, q.shape))
        else:
            qm1 = q - 1.0
            with np.errstate(divide="ignore"):
                x_a = np.where(qm1 > 0, rho_hat * l * q / np.where(qm1 > 0, qm1, 1.0),
                               np.inf)
        term = s_b(snr_threshold(x_b, tau0)) * s_a(snr_threshold(x_a, tau0))
        # snr_threshold leaves x = inf as thr = inf, which s_a maps to 0
        total += (1.0 - w) * float(np.sum(weight * term))
    return min(1.0, max(0.0, total))


def rate_coverage_meanload(prop_access: PropagationModel,
                           prop_backhaul: PropagationModel, radio: RadioConfig,
                           loads: LoadModel, cfg: RateConfig, rho: float, *,
                           link: str = "downlink") -> float:
    """Mean-load rate coverage: every load replaced by its first moment."""
    if rho < 0:
        raise ValueError("rate threshold rho must be >= 0")
    kind = _access_kind(link)
    s_a = _coverage_evaluator(prop_access, radio, kind)
    s_b = _coverage_evaluator(prop_backhaul, radio, LinkKind.BACKHAUL)
    w = loads.abs_fraction
    kappa = loads.kappa
    rho_hat = rho / cfg.bandwidth_hz
    tau0 = cfg.min_mcs_snr

    users_tagged = 1.0 + SIZE_BIAS * kappa
    thr1 = snr_threshold(rho_hat * (kappa * (1.0 - w) / w + users_tagged), tau0)
    total = w * float(s_a(np.asarray(thr1)))
    if w < 1.0:
        v = SIZE_BIAS * (1.0 - w) / w
        q = 2.0 + v
        thr_b = snr_threshold(rho_hat * users_tagged * q, tau0)
        thr_a = snr_threshold(rho_hat * users_tagged * q / (q - 1.0), tau0)
        total += (1.0 - w) * float(s_b(np.asarray(thr_b)) * s_a(np.asarray(thr_a)))
    return min(1.0, max(0.0, total))


def make_uhf_coverage(hybrid: HybridConfig, radio: RadioConfig, *,
                      grid_points: int = 81, thr_lo: float = 1e-7,
                      thr_hi: float = 1e7):
    """Tabulated single-tier UHF SINR coverage with Rayleigh fading and omni
    antennas, interpolated monotonically in log-threshold.  Thresholds at or
    below zero map to 1, beyond the table to the endpoint values."""
    beta_db, xi_db = hybrid.uhf_shadow.to_db()
    link = LinkClassParams(alpha_los=hybrid.uhf_alpha, alpha_nlos=hybrid.uhf_alpha,
                           xi_los=xi_db, xi_nlos=xi_db, beta_db=beta_db)
    blockage = BlockageParams(c_inside=1.0, d_ball=1.0, c_beyond=1.0)
    model = PropagationModel(link=link, blockage=blockage,
                             density=hybrid.uhf_density)
    uhf_radio = RadioConfig(
        p_bs_mw=hybrid.uhf_power_mw, p_ue_mw=hybrid.uhf_power_mw,
        bandwidth_hz=hybrid.uhf_bandwidth_hz, g_max=1.0, g_min=1.0,
        beamwidth_rad=math.pi, noise_psd_dbm_hz=radio.noise_psd_dbm_hz,
        noise_figure_db=radio.noise_figure_db, carrier_hz=2e9)
    omni = InterfererGainDist((1.0,), (1.0,))
    taus = np.logspace(math.log10(thr_lo), math.log10(thr_hi), grid_points)
    probs = np.array([
        sinr_coverage(model, uhf_radio, LinkKind.DOWNLINK, t, fading="rayleigh",
                      gains=omni)
        for t in taus
    ])
    probs = np.minimum.accumulate(probs)  # enforce monotone before pchip
    interp = PchipInterpolator(np.log(taus), probs, extrapolate=False)

    def coverage(thr):
        thr = np.asarray(thr, dtype=float)
        out = np.empty(thr.shape)
        out[thr <= 0.0] = 1.0
        low = (thr > 0.0) & (thr <= thr_lo)
        out[low] = probs[0]
        high = thr >= thr_hi
        out[high] = probs[-1]
        mid = (thr > thr_lo) & (thr < thr_hi)
        if np.any(mid):
            out[mid] = interp(np.log(thr[mid]))
        return out if out.ndim else float(out)

    return coverage


def hybrid_rate_coverage(prop_access: PropagationModel,
                         prop_backhaul: PropagationModel, radio: RadioConfig,
                         loads: LoadModel, cfg: RateConfig,
                         hybrid: HybridConfig, rho: float, *,
                         link: str = "downlink", uhf_coverage=None) -> float:
    """Rate coverage in the mmWave + UHF hybrid (all mmWave BSs wired).

    Users below the offload SNR threshold leave for the UHF tier; the mmWave
    term reruns the exact sum with the thinned user density and the offload
    threshold folded into the MCS floor, while the UHF term mixes the UHF
    SINR coverage over the offloaded-user load law.
    """
    if loads.abs_fraction != 1.0:
        raise ValueError("hybrid analysis requires abs_fraction = 1")
    if rho < 0:
        raise ValueError("rate threshold rho must be >= 0")
    kind = _access_kind(link)
    tau_min = hybrid.offload_threshold
    s_d_min = float(snr_coverage(prop_access, radio, kind, tau_min))
    lam_u = loads.user_density

    mm_term = 0.0
    if s_d_min > 0.0:
        mm_loads = replace(loads, user_density=lam_u * s_d_min)
        mm_cfg = replace(cfg, min_mcs_snr=max(cfg.min_mcs_snr, tau_min))
        mm_term = rate_coverage(prop_access, prop_backhaul, radio, mm_loads,
                                mm_cfg, rho, link=link)

    uhf_term = 0.0
    offloaded = 1.0 - s_d_min
    if offloaded > 1e-15:
        uhf_cov = uhf_coverage or make_uhf_coverage(hybrid, radio)
        dist = tagged_load(lam_u * offloaded, hybrid.uhf_density, cfg.sum_eps)
        thr = snr_threshold(rho * dist.support / hybrid.uhf_bandwidth_hz)
        uhf_term = offloaded * float(np.dot(dist.probs, uhf_cov(thr)))

    return min(1.0, max(0.0, mm_term + uhf_term))


def percentile_rate(coverage_fn, level: float, *, lo: float = 0.0,
                    hi_start: float = 1e6, rel_tol: float = 1e-3) -> float:
    """Largest rate rho with coverage_fn(rho) >= level (coverage nonincreasing
    in rho).  Returns 0 when even vanishing rates miss the level, as happens
    under a minimum-MCS cutoff."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    if coverage_fn(0.0) < level or coverage_fn(1.0) < level:
        return 0.0
    hi = hi_start
    lo = max(lo, 1.0)
    while coverage_fn(hi) >= level:
        lo = hi
        hi *= 4.0
        if hi > 1e16:
            raise UnreachableTargetError("rate percentile bracket overflow")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if coverage_fn(mid) >= level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def saturation_density(prop_access: PropagationModel,
                       prop_backhaul: PropagationModel, radio: RadioConfig,
                       cfg: RateConfig, *, user_density: float, gamma: float,
                       delta: float, rho: float, link: str = "downlink",
                       bracket: tuple[float, float] | None = None,
                       tol: float = 0.5e-6) -> float:
    """Smallest BS density beyond which, with the A-BS density fixed at gamma,
    extra BSs buy at most a delta fraction of rate coverage.

    Condition: 1 - S_access(thr(rho, lam)) <= delta / S_backhaul(thr_b), where
    the access threshold uses the tagged user load ~ SIZE_BIAS * lam_u / lam
    and the backhaul threshold the asymptotic SIZE_BIAS^2 * lam_u / gamma.
    The left side falls monotonically in lam, so bisection applies.  tol is
    in BSs per square meter (default half a BS per square km).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    kind = _access_kind(link)
    rho_hat = rho / cfg.bandwidth_hz
    tau0 = cfg.min_mcs_snr

    thr_b = float(snr_threshold(rho_hat * SIZE_BIAS**2 * user_density / gamma, tau0))
    backhaul_at_gamma = prop_backhaul.with_density(gamma)
    s_b = (1.0 if thr_b <= 0.0
           else float(snr_coverage(backhaul_at_gamma, radio, LinkKind.BACKHAUL, thr_b)))
    if s_b <= 0.0:
        raise UnreachableTargetError("backhaul coverage is zero at this gamma")
    rhs = delta / s_b

    def gap(lam: float) -> float:
        thr = float(snr_threshold(rho_hat * SIZE_BIAS * user_density / lam, tau0))
        s_d = (1.0 if thr <= 0.0
               else float(snr_coverage(prop_access.with_density(lam), radio, kind, thr)))
        return (1.0 - s_d) - rhs

    lo, hi = bracket if bracket is not None else (gamma, 1e-2)
    if gap(lo) <= 0.0:
        return lo
    if gap(hi) > 0.0:
        raise UnreachableTargetError(
            f"saturation condition unmet up to density {hi:g} per m^2")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class ContourResult:
    points: tuple          # (lambda, omega) pairs, ascending lambda
    omitted: tuple         # lambda values where the target is unreachable


def median_rate_contour(access_link: LinkClassParams,
                        access_blockage: BlockageParams,
                        backhaul_link: LinkClassParams,
                        backhaul_blockage: BlockageParams,
                        radio: RadioConfig, cfg: RateConfig, *,
                        user_density: float, target_rate: float,
                        lambda_grid, level: float = 0.5,
                        link: str = "downlink", omega_tol: float = 0.005,
                        omega_min: float = 0.01) -> ContourResult:
    """For each BS density, the smallest wired fraction omega whose rate
    coverage at target_rate reaches `level` (median by default).  Densities
    where even omega = 1 falls short are reported as omitted, not fatal."""
    points = []
    omitted = []
    for lam in lambda_grid:
        lam = float(lam)

        def cov(w: float) -> float:
            access = PropagationModel(access_link, access_blockage, lam)
            backhaul = PropagationModel(backhaul_link, backhaul_blockage, lam * w)
            loads = LoadModel(user_density=user_density, bs_density=lam,
                              abs_fraction=w)
            return rate_coverage(access, backhaul, radio, loads, cfg,
                                 target_rate, link=link)

        if cov(1.0) < level:
            omitted.append(lam)
            continue
        if cov(omega_min) >= level:
            points.append((lam, omega_min))
            continue
        lo, hi = omega_min, 1.0
        while hi - lo > omega_tol:
            mid = 0.5 * (lo + hi)
            if cov(mid) >= level:
                hi = mid
            else:
                lo = mid
        points.append((lam, hi))
    return ContourResult(points=tuple(points), omitted=tuple(omitted))
