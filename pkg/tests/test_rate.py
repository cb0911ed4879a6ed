import dataclasses
import math

import numpy as np
import pytest

from mmwcell.coverage import LinkKind, snr_coverage
from mmwcell.errors import UnreachableTargetError
from mmwcell.load import SIZE_BIAS, LoadModel, tagged_load
from mmwcell.network import PER_KM2, default_network
from mmwcell.rate import (CcdfCurve, RateConfig, RateLoadDists,
                          hybrid_rate_coverage, instantaneous_rate,
                          make_uhf_coverage, median_rate_contour,
                          percentile_rate, rate_coverage,
                          rate_coverage_meanload, saturation_density,
                          snr_threshold)

# frozen: (2e9/5) * min(2/3, 1/3) * log2(1 + 10^1.5)
EQ1_HAND_VALUE = 670374356.447


@pytest.fixture(scope="module")
def net():
    return default_network(bs_density_per_km2=100.0, abs_fraction=0.5,
                           user_density_per_km2=1000.0)


@pytest.fixture(scope="module")
def pieces(net):
    return (net.access_model(), net.backhaul_model(), net.radio,
            net.load_model(), net.rate)


def test_snr_threshold_floor():
    assert snr_threshold(0.0) == 0.0
    assert snr_threshold(1.0) == pytest.approx(1.0, rel=1e-15)
    assert snr_threshold(0.0, 0.1) == 0.1
    assert np.isinf(snr_threshold(np.inf))


def test_instantaneous_rate_sole_user_on_abs():
    cfg = RateConfig(bandwidth_hz=2e9)
    got = instantaneous_rate((1, 1, 0), 10.0, 9.0, 1.0, True, cfg)
    assert got == pytest.approx(2e9 * math.log2(10.0), rel=1e-12)


def test_instantaneous_rate_starved_access():
    # lone BS on the A-BS with no direct users: backhaul eats everything
    cfg = RateConfig(bandwidth_hz=2e9)
    got = instantaneous_rate((5, 0, 1), 10.0, 9.0, 9.0, False, cfg)
    assert got == 0.0


def test_instantaneous_rate_hand_value():
    cfg = RateConfig(bandwidth_hz=2e9)
    sinr = 10.0 ** 1.5
    got = instantaneous_rate((5, 10, 2), 10.0, sinr, sinr, False, cfg)
    assert got == pytest.approx(EQ1_HAND_VALUE, rel=1e-10)


def test_instantaneous_rate_min_mcs_zeroes_leg():
    cfg = RateConfig(bandwidth_hz=2e9, min_mcs_snr=1.0)
    assert instantaneous_rate((1, 1, 0), 10.0, 0.5, 1.0, True, cfg) == 0.0
    # backhaul below cutoff kills the BS branch
    assert instantaneous_rate((1, 1, 1), 10.0, 5.0, 0.5, False, cfg) == 0.0


def test_instantaneous_rate_preconditions():
    cfg = RateConfig(bandwidth_hz=2e9)
    with pytest.raises(ValueError):
        instantaneous_rate((1, 0, 0), 10.0, 1.0, 1.0, True, cfg)
    with pytest.raises(ValueError):
        instantaneous_rate((0, 1, 1), 10.0, 1.0, 1.0, False, cfg)
    with pytest.raises(ValueError):
        instantaneous_rate((1, 1, 1), 10.0, -1.0, 1.0, False, cfg)


def test_rate_coverage_at_zero_rate(pieces):
    access, backhaul, radio, loads, cfg = pieces
    assert rate_coverage(access, backhaul, radio, loads, cfg, 0.0) == \
        pytest.approx(1.0, abs=1e-8)


def test_rate_coverage_omega_one_collapses(net):
    # double sum only; compare against an explicit evaluation of that term
    loads = LoadModel(net.user_density, net.bs_density, 1.0)
    access, backhaul = net.access_model(), net.backhaul_model()
    rho = 1e8
    got = rate_coverage(access, backhaul, net.radio, loads, net.rate, rho)
    d = RateLoadDists.truncated(loads, net.rate.sum_eps)
    rho_hat = rho / net.rate.bandwidth_hz
    total = 0.0
    for n, pn in zip(d.abs_bs.support, d.abs_bs.probs):
        for m, pm in zip(d.abs_users.support, d.abs_users.probs):
            thr = float(snr_threshold(rho_hat * (loads.kappa * n + m)))
            total += pn * pm * float(snr_coverage(access, net.radio,
                                                  LinkKind.DOWNLINK, thr))
    assert got == pytest.approx(total, rel=1e-10)


def test_mean_injection_reproduces_meanload(pieces):
    access, backhaul, radio, loads, cfg = pieces
    means = RateLoadDists.at_means(loads)
    for rho in (1e7, 1e8, 5e8):
        exact_at_means = rate_coverage(access, backhaul, radio, loads, cfg,
                                       rho, dists=means)
        closed = rate_coverage_meanload(access, backhaul, radio, loads, cfg, rho)
        assert exact_at_means == pytest.approx(closed, rel=1e-10)


def test_meanload_omega_one_form(net):
    loads = LoadModel(net.user_density, net.bs_density, 1.0)
    access, backhaul = net.access_model(), net.backhaul_model()
    rho = 2e8
    got = rate_coverage_meanload(access, backhaul, net.radio, loads, net.rate, rho)
    thr = float(snr_threshold((rho / net.rate.bandwidth_hz)
                              * (1.0 + SIZE_BIAS * loads.kappa)))
    want = float(snr_coverage(access, net.radio, LinkKind.DOWNLINK, thr))
    assert got == pytest.approx(want, rel=1e-12)


def test_meanload_single_user_limit(net):
    lam = net.bs_density
    loads = LoadModel(lam * 1e-6, lam, 1.0)
    access, backhaul = net.access_model(), net.backhaul_model()
    rho = 1e8
    got = rate_coverage_meanload(access, backhaul, net.radio, loads, net.rate, rho)
    thr = float(snr_threshold(rho / net.rate.bandwidth_hz))
    want = float(snr_coverage(access, net.radio, LinkKind.DOWNLINK, thr))
    assert got == pytest.approx(want, abs=1e-4)


def test_exact_and_meanload_track(pieces):
    # the gap quantifies the mean-load approximation; the exact-sum oracle
    # measures a 0.110 maximum over this grid at these densities
    access, backhaul, radio, loads, cfg = pieces
    rhos = np.logspace(6.5, 9.7, 20)
    for rho in rhos:
        a = rate_coverage(access, backhaul, radio, loads, cfg, rho)
        b = rate_coverage_meanload(access, backhaul, radio, loads, cfg, rho)
        assert abs(a - b) <= 0.12


def test_rate_coverage_monotone(pieces, net):
    access, backhaul, radio, loads, cfg = pieces
    rhos = np.logspace(7, 9.5, 8)
    vals = [rate_coverage(access, backhaul, radio, loads, cfg, r) for r in rhos]
    assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))
    # nondecreasing in the wired fraction
    rho = 2e8
    cov_w = []
    for w in (0.25, 0.5, 1.0):
        l2 = LoadModel(net.user_density, net.bs_density, w)
        b2 = net.access_model().with_density(net.bs_density * w)
        b2 = dataclasses.replace(net.backhaul_model(), density=net.bs_density * w)
        cov_w.append(rate_coverage(access, b2, radio, l2, cfg, rho))
    assert cov_w[0] <= cov_w[1] <= cov_w[2]
    # nondecreasing in BS density at fixed omega
    cov_l = []
    for lam_km2 in (50.0, 100.0, 200.0):
        lam = lam_km2 * PER_KM2
        a2 = access.with_density(lam)
        b2 = dataclasses.replace(backhaul, density=lam * loads.abs_fraction)
        l2 = LoadModel(net.user_density, lam, loads.abs_fraction)
        cov_l.append(rate_coverage(a2, b2, radio, l2, cfg, rho))
    assert cov_l[0] <= cov_l[1] <= cov_l[2]


def test_min_mcs_caps_small_rate_coverage(net):
    tau0 = 10.0 ** (-1.0)
    cfg = dataclasses.replace(net.rate, min_mcs_snr=tau0)
    loads = LoadModel(net.user_density, net.bs_density, 1.0)
    access, backhaul = net.access_model(), net.backhaul_model()
    got = rate_coverage(access, backhaul, net.radio, loads, cfg, 1.0)
    want = float(snr_coverage(access, net.radio, LinkKind.DOWNLINK, tau0))
    assert got == pytest.approx(want, abs=1e-6)
    assert got < 1.0


def test_hybrid_no_offload_limit(net):
    loads = LoadModel(net.user_density, net.bs_density, 1.0)
    access, backhaul = net.access_model(), net.backhaul_model()
    hybrid = dataclasses.replace(net.hybrid, offload_threshold=1e-9)
    uhf = make_uhf_coverage(hybrid, net.radio, grid_points=41)
    rho = 1e8
    got = hybrid_rate_coverage(access, backhaul, net.radio, loads, net.rate,
                               hybrid, rho, uhf_coverage=uhf)
    plain = rate_coverage(access, backhaul, net.radio, loads, net.rate, rho)
    assert got == pytest.approx(plain, abs=1e-4)


def test_hybrid_all_offloaded_limit(net):
    loads = LoadModel(net.user_density, net.bs_density, 1.0)
    access, backhaul = net.access_model(), net.backhaul_model()
    hybrid = dataclasses.replace(net.hybrid, offload_threshold=1e12)
    uhf = make_uhf_coverage(hybrid, net.radio, grid_points=41)
    rho = 1e7
    got = hybrid_rate_coverage(access, backhaul, net.radio, loads, net.rate,
                               hybrid, rho, uhf_coverage=uhf)
    # pure-UHF rate coverage with every user offloaded
    dist = tagged_load(net.user_density, hybrid.uhf_density, net.rate.sum_eps)
    thr = snr_threshold(rho * dist.support / hybrid.uhf_bandwidth_hz)
    want = float(np.dot(dist.probs, uhf(thr)))
    # the residual mmWave term is S_d(offload threshold) ~ 2e-8
    assert got == pytest.approx(want, abs=1e-6)


def test_hybrid_requires_all_wired(net, pieces):
    access, backhaul, radio, loads, cfg = pieces
    with pytest.raises(ValueError):
        hybrid_rate_coverage(access, backhaul, radio, loads, cfg,
                             net.hybrid, 1e8)


def _simulate_hybrid_rate(net, hybrid, rho, trials, seed):
    """Independent hybrid oracle: mmWave tier through the simulator with all
    BSs wired, UHF tier simulated inline (Rayleigh fading, omni, min path
    loss association, full-buffer interference), SNR-threshold offloading."""
    from mmwcell.simulator import SimConfig, evaluate_snapshot, generate_snapshot

    sim = SimConfig(window=(1500.0, 1500.0), trials=trials, seed=seed,
                    fading="none", interference=True)
    area = sim.window[0] * sim.window[1]
    beta_db, xi_db = hybrid.uhf_shadow.to_db()
    noise_uhf_dbm = (net.radio.noise_psd_dbm_hz
                     + 10.0 * math.log10(hybrid.uhf_bandwidth_hz)
                     + net.radio.noise_figure_db)
    noise_uhf = 10.0 ** (noise_uhf_dbm / 10.0)
    hits = 0
    used = 0
    for trial in range(trials):
        snap = generate_snapshot(net, sim, trial=trial)
        if len(snap.user_xy) == 0 or len(snap.bs_xy) == 0:
            continue
        rec = evaluate_snapshot(snap, net, sim, trial=trial)
        rng = np.random.default_rng([seed, trial, 1_000_001])
        u = int(rng.integers(len(snap.user_xy)))
        used += 1
        if rec.snr_dl[u] >= hybrid.offload_threshold:
            # mmWave branch with the offload floor as the MCS cutoff
            off = rec.snr_dl < hybrid.offload_threshold
            bs = snap.access_assoc[u]
            stay = (~off) & (snap.access_assoc == bs)
            n_share = int(np.sum(stay))
            if rec.sinr_dl[u] >= hybrid.offload_threshold:
                rate = (net.rate.bandwidth_hz / n_share
                        * math.log2(1.0 + rec.sinr_dl[u]))
            else:
                rate = 0.0
            hits += rate > rho
            continue
        # UHF branch: offloaded users of this snapshot share the macro tier
        n_uhf = rng.poisson(hybrid.uhf_density * area)
        if n_uhf == 0:
            continue
        uhf_xy = rng.random((n_uhf, 2)) * np.asarray(sim.window)
        off_users = np.flatnonzero(rec.snr_dl < hybrid.offload_threshold)
        d = snap.user_xy[off_users][:, None, :] - uhf_xy[None, :, :]
        w = np.asarray(sim.window)
        d -= w * np.round(d / w)
        dist = np.maximum(np.hypot(d[..., 0], d[..., 1]), 1.0)
        shadow = rng.standard_normal(dist.shape) * xi_db
        loss = 10.0 ** ((beta_db + 10.0 * hybrid.uhf_alpha * np.log10(dist)
                         + shadow) / 10.0)
        fade = rng.exponential(1.0, dist.shape)
        assoc = np.argmin(loss, axis=1)
        counts = np.bincount(assoc, minlength=n_uhf)
        rows = np.arange(len(off_users))
        power = hybrid.uhf_power_mw * fade / loss
        desired = power[rows, assoc]
        interf = power.sum(axis=1) - desired
        sinr = desired / (interf + noise_uhf)
        me = int(np.flatnonzero(off_users == u)[0])
        rate = (hybrid.uhf_bandwidth_hz / counts[assoc[me]]
                * math.log2(1.0 + sinr[me]))
        hits += rate > rho
    return hits / used, used


def test_hybrid_against_monte_carlo(net):
    base = default_network(bs_density_per_km2=60.0, abs_fraction=1.0,
                           user_density_per_km2=1000.0)
    hybrid = base.hybrid
    rho = 1e7
    uhf = make_uhf_coverage(hybrid, base.radio)
    ana = hybrid_rate_coverage(base.access_model(), base.backhaul_model(),
                               base.radio, base.load_model(), base.rate,
                               hybrid, rho, uhf_coverage=uhf)
    sim_val, used = _simulate_hybrid_rate(base, hybrid, rho, trials=600, seed=21)
    assert used > 500
    assert abs(ana - sim_val) <= 0.05


def test_saturation_density_monotonicities(net):
    access, backhaul = net.access_model(), net.backhaul_model()
    common = dict(user_density=net.user_density, rho=100e6)
    gamma = 20.0 * PER_KM2
    tight = saturation_density(access, backhaul, net.radio, net.rate,
                               gamma=gamma, delta=0.01, **common)
    loose = saturation_density(access, backhaul, net.radio, net.rate,
                               gamma=gamma, delta=0.05, **common)
    assert tight >= loose
    sats = [saturation_density(access, backhaul, net.radio, net.rate,
                               gamma=g * PER_KM2, delta=0.02, **common)
            for g in (10.0, 20.0, 40.0)]
    assert sats[0] < sats[1] < sats[2]


def test_saturation_density_against_grid_search(net):
    access, backhaul = net.access_model(), net.backhaul_model()
    gamma, delta, rho = 20.0 * PER_KM2, 0.02, 100e6
    got = saturation_density(access, backhaul, net.radio, net.rate,
                             user_density=net.user_density, gamma=gamma,
                             delta=delta, rho=rho)
    # brute force at 1 BS/km^2 resolution, straight from the condition
    rho_hat = rho / net.rate.bandwidth_hz
    thr_b = float(snr_threshold(rho_hat * SIZE_BIAS**2 * net.user_density / gamma))
    s_b = float(snr_coverage(backhaul.with_density(gamma), net.radio,
                             LinkKind.BACKHAUL, thr_b))
    grid = np.arange(1.0, 2000.0) * PER_KM2
    sat = None
    for lam in grid:
        thr = float(snr_threshold(rho_hat * SIZE_BIAS * net.user_density / lam))
        s_d = float(snr_coverage(access.with_density(lam), net.radio,
                                 LinkKind.DOWNLINK, thr))
        if 1.0 - s_d <= delta / s_b:
            sat = lam
            break
    assert sat is not None
    assert abs(got - sat) <= 1.0 * PER_KM2 + 0.5 * PER_KM2


def test_saturation_unreachable(net):
    access, backhaul = net.access_model(), net.backhaul_model()
    with pytest.raises(UnreachableTargetError):
        saturation_density(access, backhaul, net.radio, net.rate,
                           user_density=net.user_density, gamma=20.0 * PER_KM2,
                           delta=1e-9, rho=100e6,
                           bracket=(20.0 * PER_KM2, 30.0 * PER_KM2))


def test_contour_monotone_and_intercept(net):
    grid = [100e-6, 150e-6, 250e-6]
    res = median_rate_contour(net.access, net.access_blockage, net.backhaul,
                              net.backhaul_blockage, net.radio, net.rate,
                              user_density=net.user_density, target_rate=3e8,
                              lambda_grid=grid)
    omegas = [w for _, w in res.points]
    assert len(res.points) == 3
    assert all(a >= b - 5e-3 for a, b in zip(omegas, omegas[1:]))
    # omega = 1 boundary: a density is omitted exactly when even all-wired
    # deployment misses the median target
    sparse = median_rate_contour(net.access, net.access_blockage, net.backhaul,
                                 net.backhaul_blockage, net.radio, net.rate,
                                 user_density=net.user_density, target_rate=3e8,
                                 lambda_grid=[10e-6])
    assert sparse.omitted == (10e-6,)
    loads = LoadModel(net.user_density, 10e-6, 1.0)
    cov = rate_coverage(net.access_model().with_density(10e-6),
                        dataclasses.replace(net.backhaul_model(), density=10e-6),
                        net.radio, loads, net.rate, 3e8)
    assert cov < 0.5


def test_percentile_rate_bisection(pieces):
    access, backhaul, radio, loads, cfg = pieces

    def cov(rho):
        return rate_coverage_meanload(access, backhaul, radio, loads, cfg, rho)

    r50 = percentile_rate(cov, 0.5)
    assert cov(r50 * 0.99) >= 0.5 >= cov(r50 * 1.01)
    # a min-MCS cutoff can make even tiny rates unreachable at high levels
    cfg2 = dataclasses.replace(cfg, min_mcs_snr=10.0 ** 1.5)
    def cov2(rho):
        return rate_coverage_meanload(access, backhaul, radio, loads, cfg2, rho)
    if cov2(1.0) < 0.95:
        assert percentile_rate(cov2, 0.95) == 0.0


def test_ccdf_curve_validation_and_percentile():
    curve = CcdfCurve(np.array([1.0, 2.0, 4.0]), np.array([0.9, 0.5, 0.1]))
    assert curve.percentile(0.5) == pytest.approx(2.0)
    assert curve.percentile(0.95) == 1.0
    assert curve.percentile(0.05) == 4.0
    with pytest.raises(ValueError):
        CcdfCurve(np.array([1.0, 2.0]), np.array([0.5, 0.9]))
    with pytest.raises(ValueError):
        CcdfCurve(np.array([2.0, 1.0]), np.array([0.9, 0.5]))
