"""Monte Carlo ground truth for the analytical engine.

Drops BS/user Poisson processes in a window, applies blockage (stochastic
LOS ball or building polygons), per-link lognormal shadowing, sectorized
antenna gains, and minimum-path-loss association for both hops; computes
per-user SINRs and rates under the proportional resource split; estimates
CCDFs with Wilson confidence intervals.

Randomness discipline: one counter-derived stream per (trial, purpose), so
toggling fading or interference does not perturb point locations, and a
fixed seed reproduces byte-identical curves regardless of scheduling.
Metrics that do not depend on the user process (SNR everywhere; downlink
SINR/INR without activity thinning) run on a reduced single-probe path that
pools far more trials per second; it computes the same typical-link
statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coverage import LinkKind, RadioConfig
from .geometry import BuildingSet, los_test
from .network import NetworkConfig
from .rate import CcdfCurve, instantaneous_rate

__all__ = [
    "SimConfig",
    "DeploymentSnapshot",
    "UserRecords",
    "generate_snapshot",
    "evaluate_snapshot",
    "estimate_ccdf",
    "collect_metric_samples",
    "ccdf_from_samples",
    "min_path_loss_samples",
    "wilson_interval",
]

_PURPOSES = {
    "bs_points": 0,
    "abs_marks": 1,
    "user_points": 2,
    "access_block": 3,
    "access_shadow": 4,
    "bh_block": 5,
    "bh_shadow": 6,
    "gain": 7,
    "fading": 8,
    "typical_pick": 9,
    "uplink_pick": 10,
    "fpc": 11,
}

_MIN_LINK_M = 1.0  # links shorter than the 1 m reference distance are clipped
_CHUNK = 512       # trials per vectorized batch on the probe path


def _rng(seed: int, trial: int, purpose: str) -> np.random.Generator:
    return np.random.default_rng([seed, trial, _PURPOSES[purpose]])


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo controls.  window is (width, height) in meters; guard
    margin applies in edge_mode="guard" and must cover the blockage ball."""

    window: tuple = (2000.0, 2000.0)
    trials: int = 1000
    seed: int = 1
    edge_mode: str = "torus"
    guard_margin: float = 0.0
    blockage_source: str = "stochastic"
    fading: str = "none"
    interference: bool = True
    activity_thinning: bool = False
    uplink_interferer_rule: str = "one-per-bs-uniform"

    def __post_init__(self):
        w, h = self.window
        if w <= 0 or h <= 0:
            raise ValueError("window area must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.edge_mode not in ("torus", "guard"):
            raise ValueError("edge_mode must be 'torus' or 'guard'")
        if self.edge_mode == "guard" and self.guard_margin < 0:
            raise ValueError("guard margin must be >= 0")
        if self.blockage_source not in ("stochastic", "polygons"):
            raise ValueError("blockage_source must be 'stochastic' or 'polygons'")
        if self.fading not in ("none", "rayleigh"):
            raise ValueError("fading must be 'none' or 'rayleigh'")
        if self.uplink_interferer_rule != "one-per-bs-uniform":
            raise ValueError("unknown uplink interferer rule")


@dataclass
class DeploymentSnapshot:
    """One realization: points, per-link blockage/shadowing marks, both
    association layers, and the realized loads.  Link matrices are receiver
    x transmitter; path loss is linear."""

    bs_xy: np.ndarray
    is_abs: np.ndarray
    user_xy: np.ndarray
    access_loss: np.ndarray      # (U, N)
    access_los: np.ndarray
    access_shadow_db: np.ndarray
    bh_loss: np.ndarray          # (N, N), symmetric marks, inf diagonal
    bh_los: np.ndarray
    bh_shadow_db: np.ndarray
    access_assoc: np.ndarray     # (U,) serving BS index, -1 if none
    bh_assoc: np.ndarray         # (N,) serving A-BS index, -1 for A-BSs / none
    n_users: np.ndarray          # (N,) users per BS
    n_bs: np.ndarray             # (N,) BSs backhauled per A-BS (0 elsewhere)
    rates_dl: np.ndarray | None = None
    rates_ul: np.ndarray | None = None


@dataclass
class UserRecords:
    """Per-user link metrics from one snapshot.  sinr_bh is the backhaul SINR
    of the user's serving chain (inf for users directly on an A-BS)."""

    snr_dl: np.ndarray
    snr_ul: np.ndarray
    sinr_dl: np.ndarray
    sinr_ul: np.ndarray
    sinr_bh: np.ndarray
    rate_dl: np.ndarray
    rate_ul: np.ndarray


def wilson_interval(successes, n, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion (vectorized)."""
    k = np.asarray(successes, dtype=float)
    if n <= 0:
        raise ValueError("need n > 0")
    p = k / n
    z2 = z * z
    den = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / den
    half = z * np.sqrt(p * (1.0 - p) / n + z2 / (4 * n * n)) / den
    return np.clip(center - half, 0.0, 1.0), np.clip(center + half, 0.0, 1.0)


def _displacements(rx_xy, tx_xy, sim: SimConfig):
    d = rx_xy[:, None, :] - tx_xy[None, :, :]
    if sim.edge_mode == "torus":
        w = np.asarray(sim.window, dtype=float)
        d -= w * np.round(d / w)
    return d


def _distances(rx_xy, tx_xy, sim: SimConfig):
    d = _displacements(rx_xy, tx_xy, sim)
    return np.maximum(np.hypot(d[..., 0], d[..., 1]), _MIN_LINK_M)


def _los_matrix_stochastic(dist, blockage, rng):
    p = np.where(dist <= blockage.d_ball, blockage.c_inside, blockage.c_beyond)
    return rng.random(dist.shape) < p


def _los_matrix_polygons(rx_xy, tx_xy, tx_blocked, buildings):
    out = np.empty((len(rx_xy), len(tx_xy)), dtype=bool)
    for j, txy in enumerate(tx_xy):
        if tx_blocked[j]:
            out[:, j] = False
            continue
        for i, rxy in enumerate(rx_xy):
            out[i, j] = los_test(rxy, txy, buildings)
    return out


def _link_matrix(rx_xy, tx_xy, link, blockage, sim, rng_block, rng_shadow, *,
                 buildings=None, tx_blocked=None, symmetric=False):
    """Distance, blockage, shadowing, and linear path loss for all pairs.
    symmetric=True mirrors the upper triangle so that (i, j) and (j, i)
    carry identical marks (same physical link)."""
    dist = _distances(rx_xy, tx_xy, sim)
    if sim.blockage_source == "stochastic":
        los = _los_matrix_stochastic(dist, blockage, rng_block)
    else:
        los = _los_matrix_polygons(rx_xy, tx_xy, tx_blocked, buildings)
    normals = rng_shadow.standard_normal(dist.shape)
    if symmetric:
        iu = np.triu_indices(dist.shape[0], 1)
        los_sym = np.zeros_like(los)
        los_sym[iu] = los[iu]
        los = los_sym | los_sym.T
        n_sym = np.zeros_like(normals)
        n_sym[iu] = normals[iu]
        normals = n_sym + n_sym.T
    shadow_db = normals * np.where(los, link.xi_los, link.xi_nlos)
    alpha = np.where(los, link.alpha_los, link.alpha_nlos)
    loss_db = link.beta_db + 10.0 * alpha * np.log10(dist) + shadow_db
    loss = 10.0 ** (loss_db / 10.0)
    if symmetric:
        np.fill_diagonal(loss, np.inf)
    return loss, los, shadow_db


def _uniform_points(rng, count, window, origin=(0.0, 0.0)):
    pts = rng.random((count, 2))
    pts[:, 0] = origin[0] + pts[:, 0] * window[0]
    pts[:, 1] = origin[1] + pts[:, 1] * window[1]
    return pts


def _outdoor_points(rng, count, window, origin, buildings: BuildingSet):
    """Uniform points conditioned on lying outside every building."""
    out = np.empty((count, 2))
    filled = 0
    attempts = 0
    while filled < count:
        batch = max(count - filled, 64)
        cand = _uniform_points(rng, batch, window, origin)
        keep = np.array([not buildings.contains(p) for p in cand])
        kept = cand[keep]
        take = min(len(kept), count - filled)
        out[filled : filled + take] = kept[:take]
        filled += take
        attempts += batch
        if attempts > 10000 * max(count, 1) + 10000:
            raise ValueError("no outdoor area available for user drops")
    return out


def generate_snapshot(net: NetworkConfig, sim: SimConfig,
                      geometry: BuildingSet | None = None, *,
                      trial: int = 0) -> DeploymentSnapshot:
    """Draw one deployment: Poisson BS and user counts, independent A-BS
    marks, blockage and shadowing per link, then minimum-path-loss
    association for users (over all BSs) and for wireless BSs (over A-BSs).

    In polygon mode the window is anchored at the building set's bounding
    box corner, BSs that land inside a building are NLOS to everyone, and
    users only fall outdoors."""
    if sim.blockage_source == "polygons":
        if geometry is None:
            raise ValueError("polygon blockage requires a BuildingSet")
        origin = (geometry.bbox[0], geometry.bbox[1])
    else:
        origin = (0.0, 0.0)
    if sim.edge_mode == "guard":
        ball = max(net.access_blockage.d_ball, net.backhaul_blockage.d_ball)
        if sim.blockage_source == "stochastic" and sim.guard_margin < ball:
            raise ValueError("guard margin must cover the blockage ball")

    area = sim.window[0] * sim.window[1]
    rng_bs = _rng(sim.seed, trial, "bs_points")
    rng_abs = _rng(sim.seed, trial, "abs_marks")
    rng_users = _rng(sim.seed, trial, "user_points")

    n_bs = rng_bs.poisson(net.bs_density * area)
    bs_xy = _uniform_points(rng_bs, n_bs, sim.window, origin)
    is_abs = rng_abs.random(n_bs) < net.abs_fraction
    n_users = rng_users.poisson(net.user_density * area)
    if sim.blockage_source == "polygons":
        user_xy = _outdoor_points(rng_users, n_users, sim.window, origin, geometry)
        bs_blocked = np.array([geometry.contains(p) for p in bs_xy])
    else:
        user_xy = _uniform_points(rng_users, n_users, sim.window, origin)
        bs_blocked = None

    access_loss, access_los, access_shadow = _link_matrix(
        user_xy, bs_xy, net.access, net.access_blockage, sim,
        _rng(sim.seed, trial, "access_block"), _rng(sim.seed, trial, "access_shadow"),
        buildings=geometry, tx_blocked=bs_blocked)
    bh_loss, bh_los, bh_shadow = _link_matrix(
        bs_xy, bs_xy, net.backhaul, net.backhaul_blockage, sim,
        _rng(sim.seed, trial, "bh_block"), _rng(sim.seed, trial, "bh_shadow"),
        buildings=geometry, tx_blocked=bs_blocked, symmetric=True)

    if n_bs > 0 and n_users > 0:
        access_assoc = np.argmin(access_loss, axis=1)
    else:
        access_assoc = np.full(n_users, -1, dtype=int)
    users_per_bs = np.bincount(access_assoc[access_assoc >= 0], minlength=n_bs)

    bh_assoc = np.full(n_bs, -1, dtype=int)
    abs_idx = np.flatnonzero(is_abs)
    if abs_idx.size > 0:
        to_abs = bh_loss[:, abs_idx]
        bh_assoc = abs_idx[np.argmin(to_abs, axis=1)]
        bh_assoc[is_abs] = -1
    bs_per_abs = np.bincount(bh_assoc[bh_assoc >= 0], minlength=n_bs)

    return DeploymentSnapshot(
        bs_xy=bs_xy, is_abs=is_abs, user_xy=user_xy,
        access_loss=access_loss, access_los=access_los,
        access_shadow_db=access_shadow,
        bh_loss=bh_loss, bh_los=bh_los, bh_shadow_db=bh_shadow,
        access_assoc=access_assoc, bh_assoc=bh_assoc,
        n_users=users_per_bs, n_bs=bs_per_abs,
    )


def _two_point_gains(rng, shape, radio: RadioConfig):
    q = radio.beamwidth_rad / (2.0 * math.pi)
    return np.where(rng.random(shape) < q, radio.g_max, radio.g_min)


def _fading(rng, shape, sim: SimConfig):
    if sim.fading == "rayleigh":
        return rng.exponential(1.0, shape)
    return np.ones(shape)


def _pick_one_user_per_bs(access_assoc, n_bs, rng):
    """Index of one uniformly chosen associated user per BS (-1 if none)."""
    order = np.argsort(access_assoc, kind="stable")
    counts = np.bincount(access_assoc[access_assoc >= 0], minlength=n_bs)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    picked = np.full(n_bs, -1, dtype=int)
    active = counts > 0
    draw = (rng.random(n_bs) * counts).astype(int)
    start = offsets[:-1] + np.minimum(draw, np.maximum(counts - 1, 0))
    skip = np.sum(access_assoc < 0)  # unassociated users sort first
    picked[active] = order[skip + start[active]]
    return picked


def evaluate_snapshot(snap: DeploymentSnapshot, net: NetworkConfig,
                      sim: SimConfig, *, trial: int = 0) -> UserRecords:
    """Per-user SNR/SINR on both access directions and the backhaul hop, and
    the resulting rates.  Desired links use aligned gains; every interfering
    link draws its gain from the sectorized mixture once per snapshot;
    uplink interference comes from one uniformly chosen user per other BS."""
    radio = net.radio
    noise = radio.noise_mw
    n_users_total = len(snap.user_xy)
    n_bs = len(snap.bs_xy)
    if n_users_total == 0 or n_bs == 0:
        empty = np.zeros(n_users_total)
        return UserRecords(*(empty.copy() for _ in range(7)))

    rng_gain = _rng(sim.seed, trial, "gain")
    rng_fade = _rng(sim.seed, trial, "fading")
    rng_pick = _rng(sim.seed, trial, "uplink_pick")

    assoc = snap.access_assoc
    users = np.arange(n_users_total)
    l_serv = snap.access_loss[users, assoc]

    # fading marks are reciprocal: one draw per physical link
    fade_access = _fading(rng_fade, snap.access_loss.shape, sim)
    iu = np.triu_indices(n_bs, 1)
    fade_bh = np.ones((n_bs, n_bs))
    if sim.fading == "rayleigh":
        draws = rng_fade.exponential(1.0, iu[0].size)
        fade_bh[iu] = draws
        fade_bh[(iu[1], iu[0])] = draws

    snr_dl = radio.p_bs_mw * radio.g_max / (noise * l_serv)
    snr_ul = radio.p_ue_mw * radio.g_max / (noise * l_serv)

    if sim.interference:
        # downlink: every other BS interferes (optionally only loaded ones)
        psi_dl = _two_point_gains(rng_gain, snap.access_loss.shape, radio)
        contrib = radio.p_bs_mw * psi_dl * fade_access / snap.access_loss
        if sim.activity_thinning:
            contrib[:, snap.n_users == 0] = 0.0
        contrib[users, assoc] = 0.0
        i_dl = contrib.sum(axis=1)

        # uplink: one user per other BS, received at the serving BS
        psi_ul = _two_point_gains(rng_gain, (n_bs, n_bs), radio)
        picked = _pick_one_user_per_bs(assoc, n_bs, rng_pick)
        i_ul = np.zeros(n_bs)
        active = np.flatnonzero(picked >= 0)
        if active.size:
            pl = snap.access_loss[picked[active], :]      # (A, N)
            fd = fade_access[picked[active], :]
            c = radio.p_ue_mw * psi_ul[active, :] * fd / pl
            c[np.arange(active.size), active] = 0.0       # own cell excluded
            i_ul = c.sum(axis=0)

        # backhaul: all other BSs interfere at the receiving BS, with the
        # receive beam pointed at its A-BS and random interferer beams
        psi_bh = (_two_point_gains(rng_gain, (n_bs, n_bs), radio)
                  * _two_point_gains(rng_gain, (n_bs, n_bs), radio))
        bh_contrib = radio.p_bs_mw * psi_bh * fade_bh / snap.bh_loss
    else:
        i_dl = np.zeros(n_users_total)
        i_ul = np.zeros(n_bs)
        bh_contrib = None

    fade_serv = fade_access[users, assoc]
    sinr_dl = radio.p_bs_mw * radio.g_max * fade_serv / (l_serv * (i_dl + noise))
    sinr_ul = radio.p_ue_mw * radio.g_max * fade_serv / (
        l_serv * (i_ul[assoc] + noise))

    # backhaul SINR per BS (receiver = the wireless BS, desired = its A-BS)
    sinr_bh_bs = np.full(n_bs, np.inf)
    wireless = np.flatnonzero(~snap.is_abs)
    served = wireless[snap.bh_assoc[wireless] >= 0]
    if served.size:
        a = snap.bh_assoc[served]
        des = radio.p_bs_mw * radio.g_max**2 * fade_bh[served, a] / snap.bh_loss[served, a]
        if bh_contrib is not None:
            rows = bh_contrib[served, :].copy()
            rows[np.arange(served.size), a] = 0.0
            rows[np.arange(served.size), served] = 0.0
            i_bh = rows.sum(axis=1)
        else:
            i_bh = np.zeros(served.size)
        sinr_bh_bs[served] = des / (i_bh + noise)
    orphan = (~snap.is_abs) & (snap.bh_assoc < 0)
    sinr_bh_bs[orphan] = 0.0  # no A-BS in the window: backhaul leg dead

    on_abs = snap.is_abs[assoc]
    gov = np.where(on_abs, assoc, snap.bh_assoc[assoc])
    ok = gov >= 0
    n_u = snap.n_users[assoc]
    n_uw = np.where(ok, snap.n_users[np.maximum(gov, 0)], 1)
    n_b = np.where(ok, snap.n_bs[np.maximum(gov, 0)], 1)
    # an A-BS counts as its own governor with no backhaul constraint
    sinr_bh_user = np.where(on_abs, np.inf, sinr_bh_bs[assoc])

    def rates(sinr_access):
        out = np.zeros(n_users_total)
        live = ok & (sinr_access > 0) & (on_abs | (sinr_bh_user > 0))
        if np.any(live):
            sb = np.where(np.isinf(sinr_bh_user[live]), 1.0, sinr_bh_user[live])
            out[live] = instantaneous_rate(
                (n_u[live], n_uw[live], n_b[live]), net.kappa,
                sinr_access[live],
                np.where(on_abs[live], 1.0, sb),
                on_abs[live], net.rate)
        return out

    rate_dl = rates(sinr_dl)
    rate_ul = rates(sinr_ul)
    snap.rates_dl = rate_dl
    snap.rates_ul = rate_ul
    return UserRecords(snr_dl=snr_dl, snr_ul=snr_ul, sinr_dl=sinr_dl,
                       sinr_ul=sinr_ul, sinr_bh=sinr_bh_user,
                       rate_dl=rate_dl, rate_ul=rate_ul)


# ---------------------------------------------------------------------------
# reduced probe path: typical-link metrics that need no user process

def _probe_process(net: NetworkConfig, kind: LinkKind):
    if kind == LinkKind.BACKHAUL:
        return (net.backhaul, net.backhaul_blockage,
                net.bs_density * net.abs_fraction)
    return (net.access, net.access_blockage, net.bs_density)


def _probe_chunk(net, sim, kind, metric, chunk_id, n_trials, *,
                 fpc=None, thinning_keep=None):
    """Vectorized batch of single-probe trials; returns one metric value per
    trial (linear SNR/SINR/INR)."""
    link, blockage, density = _probe_process(net, kind)
    radio = net.radio
    seed_base = [sim.seed, 1 + chunk_id]
    rng_pts = np.random.default_rng(seed_base + [_PURPOSES["bs_points"]])
    rng_blk = np.random.default_rng(seed_base + [_PURPOSES["access_block"]])
    rng_shw = np.random.default_rng(seed_base + [_PURPOSES["access_shadow"]])
    rng_gain = np.random.default_rng(seed_base + [_PURPOSES["gain"]])
    rng_fade = np.random.default_rng(seed_base + [_PURPOSES["fading"]])
    rng_thin = np.random.default_rng(seed_base + [_PURPOSES["uplink_pick"]])

    w = np.asarray(sim.window, dtype=float)
    area = w[0] * w[1]
    counts = rng_pts.poisson(density * area, n_trials)
    total = int(counts.sum())
    trial_of = np.repeat(np.arange(n_trials), counts)
    offsets = np.concatenate(([0], np.cumsum(counts)))

    pts = rng_pts.random((total, 2)) * w
    probe = 0.5 * w
    d = pts - probe
    if sim.edge_mode == "torus":
        d -= w * np.round(d / w)
    dist = np.maximum(np.hypot(d[:, 0], d[:, 1]), _MIN_LINK_M)

    p_los = np.where(dist <= blockage.d_ball, blockage.c_inside, blockage.c_beyond)
    los = rng_blk.random(total) < p_los
    shadow = rng_shw.standard_normal(total) * np.where(los, link.xi_los, link.xi_nlos)
    alpha = np.where(los, link.alpha_los, link.alpha_nlos)
    loss = 10.0 ** ((link.beta_db + 10.0 * alpha * np.log10(dist) + shadow) / 10.0)

    min_loss = np.full(n_trials, np.inf)
    nonempty = counts > 0
    if total:
        mins = np.minimum.reduceat(loss, offsets[:-1][nonempty])
        min_loss[nonempty] = mins

    power = radio.tx_power_mw(kind)
    g_des = radio.desired_gain(kind)
    noise = radio.noise_mw

    if metric == "loss":
        return min_loss
    if metric == "snr":
        if fpc is not None:
            # fractional power control: P0 * L^eps on the uplink
            return fpc.p0_mw * radio.g_max * min_loss ** (fpc.epsilon - 1.0) / noise
        return power * g_des / (noise * min_loss)

    # interference-bearing metrics share the serving-link identification
    if kind == LinkKind.BACKHAUL:
        psi = (_two_point_gains(rng_gain, total, radio)
               * _two_point_gains(rng_gain, total, radio))
    else:
        psi = _two_point_gains(rng_gain, total, radio)
    fade = _fading(rng_fade, total, sim)
    keep = np.ones(total, dtype=bool)
    if thinning_keep is not None:
        keep = rng_thin.random(total) < thinning_keep
    contrib = np.where(keep, power * psi * fade / loss, 0.0)

    # zero out the serving link (min path loss) of each trial
    serving = np.zeros(total, dtype=bool)
    if total:
        is_min = loss == min_loss[trial_of]
        # guard against duplicated minima: keep only the first per trial
        first = np.zeros(total, dtype=bool)
        idx = np.flatnonzero(is_min)
        seen = set()
        for i in idx:
            t = trial_of[i]
            if t not in seen:
                first[i] = True
                seen.add(t)
        serving = first

    interf = np.zeros(n_trials)
    if total:
        vals = np.where(serving, 0.0, contrib)
        sums = np.add.reduceat(vals, offsets[:-1][nonempty])
        interf[nonempty] = sums

    if metric == "inr":
        return interf / noise
    if metric == "sinr":
        fade_serv = np.ones(n_trials)
        if sim.fading == "rayleigh":
            fs = np.zeros(n_trials)
            if total:
                fs[nonempty] = fade[serving]
            fade_serv = np.where(nonempty, fs, 1.0)
        i_term = interf if sim.interference else 0.0
        return power * g_des * fade_serv / (min_loss * (i_term + noise))
    raise ValueError(f"unknown probe metric {metric!r}")


def min_path_loss_samples(net: NetworkConfig, sim: SimConfig,
                          kind: LinkKind = LinkKind.DOWNLINK) -> np.ndarray:
    """Per-trial minimum linear path loss from the typical probe to the
    relevant transmitter process; the raw material for SNR-style oracles."""
    out = []
    for chunk_id, lo in enumerate(range(0, sim.trials, _CHUNK)):
        n = min(_CHUNK, sim.trials - lo)
        out.append(_probe_chunk(net, sim, kind, "loss", chunk_id, n))
    return np.concatenate(out)


def _probe_samples(net, sim, kind, metric, *, fpc=None, trial_range=None):
    thinning_keep = None
    if sim.activity_thinning and metric in ("sinr", "inr"):
        from .load import typical_pmf

        thinning_keep = 1.0 - float(
            typical_pmf(net.user_density, net.bs_density, 0))
    lo_all, hi_all = trial_range if trial_range is not None else (0, sim.trials)
    if lo_all % _CHUNK != 0:
        raise ValueError("trial ranges must start on a chunk boundary")
    out = []
    for lo in range(lo_all, hi_all, _CHUNK):
        n = min(_CHUNK, hi_all - lo)
        out.append(_probe_chunk(net, sim, kind, metric, lo // _CHUNK, n,
                                fpc=fpc, thinning_keep=thinning_keep))
    return np.concatenate(out)


def _probe_path_ok(sim: SimConfig, kind: LinkKind, metric: str) -> bool:
    if sim.blockage_source != "stochastic":
        return False
    if metric == "snr":
        return True
    if metric in ("sinr", "inr"):
        # uplink interference needs the dependent user configuration
        return kind != LinkKind.UPLINK
    return False


def _typical_user_metric(net, sim, metric, kind, trial, geometry):
    """One pooled sample from a full snapshot: the metric of one uniformly
    chosen user (None when the snapshot has no users)."""
    snap = generate_snapshot(net, sim, geometry, trial=trial)
    if len(snap.user_xy) == 0 or len(snap.bs_xy) == 0:
        return None
    rng = _rng(sim.seed, trial, "typical_pick")
    u = int(rng.integers(len(snap.user_xy)))
    rec = evaluate_snapshot(snap, net, sim, trial=trial)
    if metric == "rate":
        return rec.rate_ul[u] if kind == LinkKind.UPLINK else rec.rate_dl[u]
    if metric == "snr":
        return rec.snr_ul[u] if kind == LinkKind.UPLINK else rec.snr_dl[u]
    if metric == "sinr":
        if kind == LinkKind.BACKHAUL:
            v = rec.sinr_bh[u]
            return None if np.isinf(v) else v
        return rec.sinr_ul[u] if kind == LinkKind.UPLINK else rec.sinr_dl[u]
    if metric == "inr":
        # interference at the relevant receiver over noise
        if kind == LinkKind.UPLINK:
            sinr = rec.sinr_ul[u]
            snr = rec.snr_ul[u]
        else:
            sinr = rec.sinr_dl[u]
            snr = rec.snr_dl[u]
        if sim.fading == "rayleigh":
            raise ValueError("INR pooling from full snapshots needs fading='none'")
        return snr / sinr - 1.0
    raise ValueError(f"unknown metric {metric!r}")


def collect_metric_samples(metric: str, kind: LinkKind, net: NetworkConfig,
                           sim: SimConfig, *,
                           geometry: BuildingSet | None = None, fpc=None,
                           trial_range: tuple | None = None):
    """One typical-link sample per trial over [trial_range).  Returns
    (values, n_skipped); skipped trials had no users to pool.  Samples depend
    only on (config, seed, absolute trial index), so disjoint ranges can run
    on different workers and concatenate deterministically (probe-path ranges
    must start on multiples of the internal chunk size)."""
    kind = LinkKind(kind)
    rng_range = trial_range if trial_range is not None else (0, sim.trials)
    if metric != "rate" and _probe_path_ok(sim, kind, metric):
        use_fpc = fpc if metric == "snr" else None
        if fpc is not None and metric != "snr":
            raise ValueError("fractional power control applies to the snr metric")
        return _probe_samples(net, sim, kind, metric, fpc=use_fpc,
                              trial_range=rng_range), 0
    if fpc is not None:
        raise ValueError("fractional power control needs the probe path")
    vals = []
    skipped = 0
    for trial in range(*rng_range):
        v = _typical_user_metric(net, sim, metric, kind, trial, geometry)
        if v is None:
            skipped += 1
        else:
            vals.append(float(v))
    return np.asarray(vals), skipped


def ccdf_from_samples(values: np.ndarray, thresholds, *,
                      n_skipped: int = 0) -> CcdfCurve:
    """Empirical CCDF over the threshold grid with Wilson 95% intervals."""
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.ndim != 1 or thresholds.size == 0 or np.any(np.diff(thresholds) <= 0):
        raise ValueError("thresholds must be a nonempty ascending 1-D grid")
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise ValueError("no samples; enlarge the window or densities")
    counts = (values[None, :] > thresholds[:, None]).sum(axis=1)
    probs = counts / n
    lo, hi = wilson_interval(counts, n)
    return CcdfCurve(thresholds=thresholds, probabilities=probs,
                     ci_low=lo, ci_high=hi, n_samples=n, n_skipped=n_skipped)


def estimate_ccdf(metric: str, kind: LinkKind, net: NetworkConfig,
                  sim: SimConfig, thresholds, *,
                  geometry: BuildingSet | None = None,
                  fpc=None) -> CcdfCurve:
    """Empirical CCDF of the typical-user metric with Wilson 95% intervals.

    One statistic is pooled per snapshot (users within a snapshot share
    interference, so pooling them all would understate the CI).  Trials with
    no users are skipped and counted in n_skipped.  Deterministic in
    (config, seed)."""
    values, skipped = collect_metric_samples(metric, kind, net, sim,
                                             geometry=geometry, fpc=fpc)
    return ccdf_from_samples(values, thresholds, n_skipped=skipped)
