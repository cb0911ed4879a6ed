import dataclasses
import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from mmwcell.coverage import (FpcParams, InterfererGainDist, LinkKind,
                              RadioConfig, inr_bound_ccdf,
                              inr_uniform_closed_form, sinr_coverage,
                              snr_coverage, total_power_transform,
                              uplink_fpc_coverage)
from mmwcell.numerics import LognormalParams, integrate_adaptive
from mmwcell.propagation import (BlockageParams, LinkClassParams,
                                 PropagationModel, path_loss_quantile,
                                 quadrature_hints, scalar_density_fn,
                                 scalar_measure_fn)


def test_radio_noise_budget(table_radio):
    # -174 dBm/Hz + 10 log10(2 GHz) + 10 dB NF = -70.99 dBm
    want_dbm = -174.0 + 10.0 * math.log10(2e9) + 10.0
    assert 10.0 * math.log10(table_radio.noise_mw) == pytest.approx(want_dbm, abs=1e-12)
    assert table_radio.g_max == pytest.approx(10.0 ** 1.8, rel=1e-12)


def test_radio_invariants():
    with pytest.raises(ValueError):
        RadioConfig.from_db(beamwidth_deg=0.0)
    with pytest.raises(ValueError):
        RadioConfig.from_db(g_max_db=-3.0, g_min_db=0.0)


def test_gain_dist_validation(table_radio):
    with pytest.raises(ValueError):
        InterfererGainDist((1.0, 2.0), (0.6, 0.6))
    d = InterfererGainDist.access(table_radio)
    assert sum(d.probs) == pytest.approx(1.0, abs=1e-15)
    q = table_radio.beamwidth_rad / (2 * math.pi)
    assert d.moment(1.0) == pytest.approx(
        q * table_radio.g_max + (1 - q) * table_radio.g_min, rel=1e-12)
    b = InterfererGainDist.backhaul(table_radio)
    assert sum(b.probs) == pytest.approx(1.0, abs=1e-15)
    assert b.gains[0] == pytest.approx(table_radio.g_max**2, rel=1e-12)


def test_snr_coverage_limits_and_monotonicity(manhattan_access, table_radio):
    assert snr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK,
                        1e-12) >= 1.0 - 1e-6
    taus = np.logspace(-2, 3, 50)
    cov = snr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK, taus)
    assert np.all(np.diff(cov) < 0)
    with pytest.raises(ValueError):
        snr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK, 0.0)


def test_snr_coverage_vs_noise_only_simulation(net_defaults):
    from mmwcell.simulator import SimConfig, ccdf_from_samples, collect_metric_samples

    sim = SimConfig(window=(3000.0, 3000.0), trials=20000, seed=5,
                    interference=False)
    taus = 10.0 ** (np.array([-5.0, 0.0, 5.0, 10.0]) / 10.0)
    model = net_defaults.access_model()
    ana = snr_coverage(model, net_defaults.radio, LinkKind.DOWNLINK, taus)
    vals, _ = collect_metric_samples("snr", LinkKind.DOWNLINK, net_defaults, sim)
    curve = ccdf_from_samples(vals, taus)
    se = np.sqrt(ana * (1 - ana) / sim.trials)
    assert np.all(np.abs(curve.probabilities - ana) <= 3 * se + 1e-9)


def test_fpc_epsilon_zero_bit_matches_uplink(manhattan_access, table_radio):
    taus = np.logspace(-1, 2, 7)
    fpc = FpcParams(p0_mw=table_radio.p_ue_mw, epsilon=0.0)
    a = uplink_fpc_coverage(manhattan_access, table_radio, fpc, taus)
    b = snr_coverage(manhattan_access, table_radio, LinkKind.UPLINK, taus)
    assert np.array_equal(a, b)


def test_fpc_full_compensation_limit(manhattan_access, table_radio):
    # eps -> 1: coverage -> 1{P0 G > tau sigma^2}
    fpc = FpcParams(p0_mw=table_radio.p_ue_mw, epsilon=0.999)
    noise = table_radio.noise_mw
    tau_hi = 2.0 * table_radio.p_ue_mw * table_radio.g_max / noise
    tau_lo = 0.5 * table_radio.p_ue_mw * table_radio.g_max / noise
    assert uplink_fpc_coverage(manhattan_access, table_radio, fpc, tau_hi) <= 1e-9
    assert uplink_fpc_coverage(manhattan_access, table_radio, fpc, tau_lo) >= 1 - 1e-9


def test_fpc_against_monte_carlo(net_defaults):
    from mmwcell.simulator import SimConfig, ccdf_from_samples, collect_metric_samples

    fpc = FpcParams(p0_mw=net_defaults.radio.p_ue_mw, epsilon=0.5)
    sim = SimConfig(window=(3000.0, 3000.0), trials=20000, seed=9,
                    interference=False)
    taus = np.array([1.0])
    ana = uplink_fpc_coverage(net_defaults.access_model(), net_defaults.radio,
                              fpc, taus)
    vals, _ = collect_metric_samples("snr", LinkKind.UPLINK, net_defaults, sim,
                                     fpc=fpc)
    curve = ccdf_from_samples(vals, taus)
    se = math.sqrt(ana[0] * (1 - ana[0]) / sim.trials)
    assert abs(curve.probabilities[0] - ana[0]) <= 3 * se + 1e-9


def test_inr_bound_near_zero_threshold(manhattan_access, table_radio):
    assert inr_bound_ccdf(manhattan_access, table_radio, 1e-9) == \
        pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        inr_bound_ccdf(manhattan_access, table_radio, 0.0)


def test_inr_bound_monotone_in_density(manhattan_access, table_radio):
    ys = 10.0 ** (np.array([-10.0, 0.0, 10.0]) / 10.0)
    lo = [inr_bound_ccdf(manhattan_access, table_radio, y) for y in ys]
    dense = manhattan_access.with_density(2 * manhattan_access.density)
    hi = [inr_bound_ccdf(dense, table_radio, y) for y in ys]
    assert all(h >= l - 1e-9 for h, l in zip(hi, lo))


def _uniform_shadow():
    return LognormalParams.from_db(70.0, 7.6)


def test_closed_form_gamma_factor(table_radio):
    # alpha = 4 puts Gamma(-1/2) = -2 sqrt(pi) in the exponent
    gains = InterfererGainDist.access(table_radio)
    shadow = _uniform_shadow()
    lam = 1e-4
    tr = inr_uniform_closed_form(4.0, shadow, table_radio, gains, lam)
    z = 3.0
    n = 0.5
    coef = (2 * math.pi * lam / 4.0) * table_radio.p_bs_mw**n \
        * shadow.moment(n) * gains.moment(n) * (-2.0 * math.sqrt(math.pi))
    want = np.exp(coef * (z / table_radio.noise_mw) ** n)
    assert complex(tr(z)) == pytest.approx(want, rel=1e-12)
    assert gamma_fn(-0.5) == pytest.approx(-2.0 * math.sqrt(math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        inr_uniform_closed_form(2.0, shadow, table_radio, gains, lam)


@pytest.mark.parametrize("c", [2.0, 10.0])
def test_density_bandwidth_equivalence(table_radio, c):
    gains = InterfererGainDist.access(table_radio)
    shadow = _uniform_shadow()
    alpha, lam = 3.3, 1e-4
    base = inr_uniform_closed_form(alpha, shadow, table_radio, gains, lam)
    scaled_radio = dataclasses.replace(
        table_radio, bandwidth_hz=table_radio.bandwidth_hz * c ** (alpha / 2))
    scaled = inr_uniform_closed_form(alpha, shadow, scaled_radio, gains, c * lam)
    for z in (0.5, 5.0, 50.0):
        assert abs(complex(base(z)) - complex(scaled(z))) <= 1e-9 * abs(complex(base(z)))


def test_closed_form_matches_general_quadrature(table_radio):
    gains = InterfererGainDist.access(table_radio)
    shadow = _uniform_shadow()
    alpha, lam = 3.3, 1e-4
    link = LinkClassParams(alpha, alpha, 7.6, 7.6, 70.0)
    model = PropagationModel(link, BlockageParams(1.0, 200.0, 1.0), lam)
    closed = inr_uniform_closed_form(alpha, shadow, table_radio, gains, lam)
    general = total_power_transform(model, table_radio)
    for z in (0.1, 1.0, 10.0):
        a, b = complex(closed(z)), complex(general(z))
        assert abs(a - b) <= 1e-6 * abs(a)


def test_sinr_coverage_near_zero_threshold(manhattan_access, table_radio):
    got = sinr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK,
                        1e-9, fading="rayleigh")
    assert got == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        sinr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK, 0.0)


def test_sinr_no_interference_matches_direct_quadrature(manhattan_access,
                                                        table_radio):
    tau = 1.0
    got = sinr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK, tau,
                        fading="rayleigh", gains=InterfererGainDist.silent())
    lam = manhattan_access.density
    ms = scalar_measure_fn(manhattan_access)
    md = scalar_density_fn(manhattan_access)
    c0 = tau * table_radio.noise_mw / (table_radio.p_bs_mw * table_radio.g_max)
    hi = path_loss_quantile(manhattan_access, 1e-13)
    oracle = integrate_adaptive(
        lambda l: math.exp(-c0 * l - lam * ms(l)) * lam * md(l), 0.0, hi,
        points=quadrature_hints(manhattan_access), rel_tol=1e-10)
    assert got == pytest.approx(oracle, rel=1e-5)


def test_snr_dominates_sinr_without_fading(manhattan_access, table_radio):
    for tau in (1.0, 10.0):
        s = float(snr_coverage(manhattan_access, table_radio,
                               LinkKind.DOWNLINK, tau))
        p = sinr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK,
                          tau, fading="none", nodes=24)
        assert s >= p - 1e-4
        assert 0.0 <= p <= 1.0


def test_sinr_thinning_reduces_interference(manhattan_access, table_radio):
    tau = 2.0
    full = sinr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK,
                         tau, fading="rayleigh")
    thin = sinr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK,
                         tau, fading="rayleigh", activity_thinning=True,
                         user_density=50e-6)
    assert thin >= full
    with pytest.raises(ValueError):
        sinr_coverage(manhattan_access, table_radio, LinkKind.DOWNLINK, tau,
                      fading="rayleigh", activity_thinning=True)


def test_sinr_rayleigh_against_thinned_monte_carlo(net_defaults):
    # the analytical thinning model: interferers removed independently with
    # the typical-cell void probability; simulate exactly that model
    from mmwcell.simulator import SimConfig, ccdf_from_samples, collect_metric_samples

    net = net_defaults
    tau = 1.0
    ana = sinr_coverage(net.access_model(), net.radio, LinkKind.DOWNLINK, tau,
                        fading="rayleigh", activity_thinning=True,
                        user_density=net.user_density)
    sim = SimConfig(window=(2000.0, 2000.0), trials=8000, seed=17,
                    fading="rayleigh", interference=True,
                    activity_thinning=True)
    vals, _ = collect_metric_samples("sinr", LinkKind.DOWNLINK, net, sim)
    curve = ccdf_from_samples(vals, np.array([tau]))
    assert abs(curve.probabilities[0] - ana) <= 0.03
