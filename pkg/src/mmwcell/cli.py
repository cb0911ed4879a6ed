"""Batch front end.

One subcommand per study; TOML configuration with dB/per-km^2 units at the
boundary, every omitted field defaulting to the dense-urban working values;
CSV output plus a JSON sidecar carrying the fully resolved configuration
(internal units), seed, versions, and wall time.  Re-running with the
sidecar as the config reproduces the run.

Exit codes: 0 ok, 2 configuration, 3 numeric failure, 4 I/O,
5 unreachable target.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .coverage import FpcParams, LinkKind, snr_coverage, sinr_coverage, \
    uplink_fpc_coverage, inr_bound_ccdf
from .errors import ConfigError, ConvergenceError, UnreachableTargetError
from .geometry import fit_blockage_curve, load_buildings
from .network import PER_KM2, NetworkConfig, default_network
from .rate import (hybrid_rate_coverage, median_rate_contour, rate_coverage,
                   rate_coverage_meanload, saturation_density)
from .simulator import (SimConfig, ccdf_from_samples, collect_metric_samples,
                        _CHUNK)

_DB10 = 10.0


def _db_to_linear(x):
    return 10.0 ** (x / _DB10)


# ---------------------------------------------------------------------------
# configuration resolution: boundary units (TOML) -> canonical internal units


def _default_canonical() -> dict:
    net = default_network()
    h = net.hybrid
    return {
        "network": {
            "bs_density_per_m2": net.bs_density,
            "abs_fraction": net.abs_fraction,
            "user_density_per_m2": net.user_density,
        },
        "access": {
            "alpha_los": net.access.alpha_los, "alpha_nlos": net.access.alpha_nlos,
            "xi_los_db": net.access.xi_los, "xi_nlos_db": net.access.xi_nlos,
            "beta_db": net.access.beta_db,
        },
        "backhaul": {
            "alpha_los": net.backhaul.alpha_los, "alpha_nlos": net.backhaul.alpha_nlos,
            "xi_los_db": net.backhaul.xi_los, "xi_nlos_db": net.backhaul.xi_nlos,
            "beta_db": net.backhaul.beta_db,
        },
        "blockage_access": {
            "los_fraction": net.access_blockage.c_inside,
            "ball_radius_m": net.access_blockage.d_ball,
            "los_fraction_beyond": net.access_blockage.c_beyond,
        },
        "blockage_backhaul": {
            "los_fraction": net.backhaul_blockage.c_inside,
            "ball_radius_m": net.backhaul_blockage.d_ball,
            "los_fraction_beyond": net.backhaul_blockage.c_beyond,
        },
        "radio": {
            "bs_power_mw": net.radio.p_bs_mw, "ue_power_mw": net.radio.p_ue_mw,
            "bandwidth_hz": net.radio.bandwidth_hz,
            "gain_max": net.radio.g_max, "gain_min": net.radio.g_min,
            "beamwidth_rad": net.radio.beamwidth_rad,
            "noise_psd_dbm_hz": net.radio.noise_psd_dbm_hz,
            "noise_figure_db": net.radio.noise_figure_db,
            "carrier_hz": net.radio.carrier_hz,
        },
        "rate": {
            "min_mcs_snr": net.rate.min_mcs_snr,
            "sum_eps": net.rate.sum_eps,
        },
        "hybrid": {
            "uhf_density_per_m2": h.uhf_density,
            "uhf_bandwidth_hz": h.uhf_bandwidth_hz,
            "uhf_alpha": h.uhf_alpha,
            "uhf_beta_db": h.uhf_shadow.to_db()[0],
            "uhf_xi_db": h.uhf_shadow.to_db()[1],
            "uhf_power_mw": h.uhf_power_mw,
            "offload_threshold": h.offload_threshold,
        },
        "sim": {
            "window_m": [2000.0, 2000.0],
            "trials": 1000,
            "seed": 1,
            "edge_mode": "torus",
            "guard_margin_m": 250.0,
            "blockage_source": "stochastic",
            "fading": "none",
            "interference": True,
            "activity_thinning": False,
        },
    }


# boundary-unit key -> (canonical section, canonical key, converter)
_BOUNDARY_MAP = {
    ("network", "bs_density_per_km2"): ("network", "bs_density_per_m2",
                                        lambda v: v / 1e6),
    ("network", "abs_fraction"): ("network", "abs_fraction", float),
    ("network", "user_density_per_km2"): ("network", "user_density_per_m2",
                                          lambda v: v / 1e6),
    ("radio", "bs_power_dbm"): ("radio", "bs_power_mw", _db_to_linear),
    ("radio", "ue_power_dbm"): ("radio", "ue_power_mw", _db_to_linear),
    ("radio", "bandwidth_hz"): ("radio", "bandwidth_hz", float),
    ("radio", "gain_max_db"): ("radio", "gain_max", _db_to_linear),
    ("radio", "gain_min_db"): ("radio", "gain_min", _db_to_linear),
    ("radio", "beamwidth_deg"): ("radio", "beamwidth_rad", math.radians),
    ("radio", "noise_psd_dbm_hz"): ("radio", "noise_psd_dbm_hz", float),
    ("radio", "noise_figure_db"): ("radio", "noise_figure_db", float),
    ("radio", "carrier_hz"): ("radio", "carrier_hz", float),
    ("rate", "min_mcs_snr_db"): ("rate", "min_mcs_snr", _db_to_linear),
    ("rate", "sum_eps"): ("rate", "sum_eps", float),
    ("hybrid", "uhf_density_per_km2"): ("hybrid", "uhf_density_per_m2",
                                        lambda v: v / 1e6),
    ("hybrid", "uhf_bandwidth_hz"): ("hybrid", "uhf_bandwidth_hz", float),
    ("hybrid", "uhf_alpha"): ("hybrid", "uhf_alpha", float),
    ("hybrid", "uhf_beta_db"): ("hybrid", "uhf_beta_db", float),
    ("hybrid", "uhf_xi_db"): ("hybrid", "uhf_xi_db", float),
    ("hybrid", "uhf_power_dbm"): ("hybrid", "uhf_power_mw", _db_to_linear),
    ("hybrid", "offload_threshold_db"): ("hybrid", "offload_threshold",
                                         _db_to_linear),
}

for _section in ("access", "backhaul"):
    for _key in ("alpha_los", "alpha_nlos", "xi_los_db", "xi_nlos_db", "beta_db"):
        _BOUNDARY_MAP[(_section, _key)] = (_section, _key, float)
for _section in ("access", "backhaul"):
    for _key, _conv in (("los_fraction", float), ("ball_radius_m", float),
                        ("los_fraction_beyond", float)):
        _BOUNDARY_MAP[("blockage." + _section, _key)] = \
            ("blockage_" + _section, _key, _conv)
for _key, _conv in (("window_m", lambda v: [float(v[0]), float(v[1])]),
                    ("trials", int), ("seed", int), ("edge_mode", str),
                    ("guard_margin_m", float), ("blockage_source", str),
                    ("fading", str), ("interference", bool),
                    ("activity_thinning", bool)):
    _BOUNDARY_MAP[("sim", _key)] = ("sim", _key, _conv)


def _flatten_boundary(doc: dict) -> dict:
    """Flatten a parsed TOML document to {(section, key): value}; the nested
    [blockage.access] tables become 'blockage.access' sections."""
    flat = {}
    for section, body in doc.items():
        if not isinstance(body, dict):
            raise ConfigError(f"top-level entry {section!r} must be a table")
        for key, value in body.items():
            if isinstance(value, dict):
                for k2, v2 in value.items():
                    flat[(f"{section}.{key}", k2)] = v2
            else:
                flat[(section, key)] = value
    return flat


def resolve_config(doc: dict) -> dict:
    """Boundary-unit mapping -> fully resolved canonical (internal units)."""
    canonical = _default_canonical()
    for (section, key), value in _flatten_boundary(doc).items():
        spec = _BOUNDARY_MAP.get((section, key))
        if spec is None:
            raise ConfigError(f"unknown configuration key [{section}] {key}")
        csec, ckey, conv = spec
        try:
            canonical[csec][ckey] = conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}] {key}: bad value {value!r} ({exc})")
    return canonical


def _merge_canonical(base: dict, override: dict) -> dict:
    for section, body in override.items():
        if section not in base:
            raise ConfigError(f"unknown canonical section {section!r}")
        for key, value in body.items():
            if key not in base[section]:
                raise ConfigError(f"unknown canonical key {section}.{key}")
            base[section][key] = value
    return base


def load_config(path: str | None, overrides: list[str]) -> dict:
    """Load TOML (boundary units) or a JSON sidecar (canonical units), apply
    --set overrides (boundary keys for TOML, canonical for JSON), return the
    resolved canonical mapping."""
    if path is None:
        doc: dict = {}
        canonical_input = False
    elif str(path).endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        doc = sidecar.get("config", sidecar)
        canonical_input = True
    else:
        with open(path, "rb") as fh:
            try:
                doc = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}")
        canonical_input = False

    parsed_overrides: dict = {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) < 2:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = parsed_overrides
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value

    if canonical_input:
        canonical = _merge_canonical(_default_canonical(), doc)
        if parsed_overrides:
            canonical = _merge_canonical(canonical, parsed_overrides)
        return canonical
    merged = doc
    for section, body in parsed_overrides.items():
        tgt = merged.setdefault(section, {})
        for key, value in body.items():
            if isinstance(value, dict):
                tgt.setdefault(key, {}).update(value)
            else:
                tgt[key] = value
    return resolve_config(merged)


def network_from_canonical(c: dict) -> NetworkConfig:
    from .coverage import RadioConfig
    from .numerics import LognormalParams
    from .propagation import BlockageParams, LinkClassParams
    from .rate import HybridConfig, RateConfig

    try:
        radio = RadioConfig(
            p_bs_mw=c["radio"]["bs_power_mw"], p_ue_mw=c["radio"]["ue_power_mw"],
            bandwidth_hz=c["radio"]["bandwidth_hz"], g_max=c["radio"]["gain_max"],
            g_min=c["radio"]["gain_min"], beamwidth_rad=c["radio"]["beamwidth_rad"],
            noise_psd_dbm_hz=c["radio"]["noise_psd_dbm_hz"],
            noise_figure_db=c["radio"]["noise_figure_db"],
            carrier_hz=c["radio"]["carrier_hz"])
        link = {}
        for sec in ("access", "backhaul"):
            link[sec] = LinkClassParams(
                alpha_los=c[sec]["alpha_los"], alpha_nlos=c[sec]["alpha_nlos"],
                xi_los=c[sec]["xi_los_db"], xi_nlos=c[sec]["xi_nlos_db"],
                beta_db=c[sec]["beta_db"])
        blk = {}
        for sec in ("access", "backhaul"):
            b = c["blockage_" + sec]
            blk[sec] = BlockageParams(c_inside=b["los_fraction"],
                                      d_ball=b["ball_radius_m"],
                                      c_beyond=b["los_fraction_beyond"])
        h = c["hybrid"]
        hybrid = HybridConfig(
            uhf_density=h["uhf_density_per_m2"],
            uhf_bandwidth_hz=h["uhf_bandwidth_hz"], uhf_alpha=h["uhf_alpha"],
            uhf_shadow=LognormalParams.from_db(h["uhf_beta_db"], h["uhf_xi_db"]),
            uhf_power_mw=h["uhf_power_mw"],
            offload_threshold=h["offload_threshold"])
        return NetworkConfig(
            bs_density=c["network"]["bs_density_per_m2"],
            abs_fraction=c["network"]["abs_fraction"],
            user_density=c["network"]["user_density_per_m2"],
            access=link["access"], backhaul=link["backhaul"],
            access_blockage=blk["access"], backhaul_blockage=blk["backhaul"],
            radio=radio,
            rate=RateConfig(bandwidth_hz=c["radio"]["bandwidth_hz"],
                            min_mcs_snr=c["rate"]["min_mcs_snr"],
                            sum_eps=c["rate"]["sum_eps"]),
            hybrid=hybrid)
    except ValueError as exc:
        raise ConfigError(str(exc))


def sim_from_canonical(c: dict) -> SimConfig:
    s = c["sim"]
    try:
        return SimConfig(window=tuple(s["window_m"]), trials=s["trials"],
                         seed=s["seed"], edge_mode=s["edge_mode"],
                         guard_margin=s["guard_margin_m"],
                         blockage_source=s["blockage_source"],
                         fading=s["fading"], interference=s["interference"],
                         activity_thinning=s["activity_thinning"])
    except ValueError as exc:
        raise ConfigError(str(exc))


# ---------------------------------------------------------------------------
# grids and output


def parse_grid(spec: str) -> tuple[np.ndarray, str]:
    """min:max:points[:scale] with scale in linear|log|db; returns (grid in
    the stated units, scale)."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"grid must be min:max:points[:scale], got {spec!r}")
    lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
    scale = parts[3] if len(parts) == 4 else "linear"
    if pts < 1 or hi <= lo:
        raise ConfigError("grid needs hi > lo and points >= 1")
    if scale == "log":
        if lo <= 0:
            raise ConfigError("log grid needs positive endpoints")
        grid = np.logspace(math.log10(lo), math.log10(hi), pts)
    elif scale in ("linear", "db"):
        grid = np.linspace(lo, hi, pts)
    else:
        raise ConfigError(f"unknown grid scale {scale!r}")
    return grid, scale


def _grid_linear(grid: np.ndarray, scale: str) -> np.ndarray:
    return _db_to_linear(grid) if scale == "db" else grid


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (int, float, np.floating))
                              else str(v) for v in row) + "\n")


def write_sidecar(path: str, *, command: str, canonical: dict, seed,
                  wall_time: float, extras: dict | None = None) -> None:
    doc = {
        "command": command,
        "config": canonical,
        "seed": seed,
        "versions": {
            "mmwcell": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "wall_time_s": wall_time,
    }
    if extras:
        doc["extras"] = extras
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sidecar_path(output: str) -> str:
    base, _ = os.path.splitext(output)
    return base + ".json"


_LINK = {"downlink": LinkKind.DOWNLINK, "uplink": LinkKind.UPLINK,
         "backhaul": LinkKind.BACKHAUL}


def _model_for_kind(net: NetworkConfig, kind: LinkKind):
    return net.backhaul_model() if kind == LinkKind.BACKHAUL else net.access_model()


# ---------------------------------------------------------------------------
# simulation sample collection with an optional worker pool


def _collect_task(args):
    metric, kind, net, sim, trial_range = args
    vals, skipped = collect_metric_samples(metric, kind, net, sim,
                                           trial_range=trial_range)
    return vals, skipped


def collect_samples_parallel(metric: str, kind: LinkKind, net: NetworkConfig,
                             sim: SimConfig, workers: int, geometry=None,
                             fpc=None):
    if workers <= 1 or sim.trials < 2 * _CHUNK or geometry is not None or fpc is not None:
        return collect_metric_samples(metric, kind, net, sim,
                                      geometry=geometry, fpc=fpc)
    # split on chunk boundaries so probe-path draws are split-invariant
    n_chunks = (sim.trials + _CHUNK - 1) // _CHUNK
    per = max(1, n_chunks // workers)
    ranges = []
    lo = 0
    while lo < sim.trials:
        hi = min(lo + per * _CHUNK, sim.trials)
        ranges.append((lo, hi))
        lo = hi
    tasks = [(metric, kind, net, sim, r) for r in ranges]
    values = []
    skipped = 0
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for vals, sk in pool.map(_collect_task, tasks):
            values.append(vals)
            skipped += sk
    return np.concatenate(values), skipped


# ---------------------------------------------------------------------------
# commands


def _cmd_coverage(args, net, sim, canonical):
    grid, scale = parse_grid(args.grid or "-10:30:41:db")
    taus = _grid_linear(grid, scale)
    kind = _LINK[args.link]
    model = _model_for_kind(net, kind)
    if args.quantity == "snr":
        probs = snr_coverage(model, net.radio, kind, taus)
    elif args.quantity == "fpc":
        if kind != LinkKind.UPLINK:
            raise ConfigError("fractional power control is an uplink quantity")
        fpc = FpcParams(p0_mw=_db_to_linear(args.fpc_p0_dbm), epsilon=args.fpc_epsilon)
        probs = uplink_fpc_coverage(model, net.radio, fpc, taus)
    elif args.quantity == "sinr-fading":
        probs = np.array([
            sinr_coverage(model, net.radio, kind, t, fading="rayleigh",
                          activity_thinning=args.activity_thinning,
                          user_density=net.user_density)
            for t in taus])
    else:  # sinr-nofading: exact conditional inversion, expensive
        probs = np.array([
            sinr_coverage(model, net.radio, kind, t, fading="none",
                          activity_thinning=args.activity_thinning,
                          user_density=net.user_density)
            for t in taus])
    rows = zip(grid, probs)
    write_csv(args.output, ["threshold", "value"], rows)
    return {}


def _cmd_rate(args, net, sim, canonical):
    grid, scale = parse_grid(args.grid or "1e6:1e10:25:log")
    rhos = _grid_linear(grid, scale)
    access = net.access_model()
    backhaul = net.backhaul_model()
    loads = net.load_model()
    if args.mode == "exact":
        probs = [rate_coverage(access, backhaul, net.radio, loads, net.rate,
                               r, link=args.link) for r in rhos]
    elif args.mode == "meanload":
        probs = [rate_coverage_meanload(access, backhaul, net.radio, loads,
                                        net.rate, r, link=args.link)
                 for r in rhos]
    else:  # hybrid
        if net.abs_fraction != 1.0:
            raise ConfigError("hybrid mode requires abs_fraction = 1")
        from .rate import make_uhf_coverage

        uhf = make_uhf_coverage(net.hybrid, net.radio)
        probs = [hybrid_rate_coverage(access, backhaul, net.radio, loads,
                                      net.rate, net.hybrid, r, link=args.link,
                                      uhf_coverage=uhf) for r in rhos]
    write_csv(args.output, ["threshold", "value"], zip(grid, probs))
    return {}


def _cmd_inr(args, net, sim, canonical):
    grid, scale = parse_grid(args.grid or "-20:20:21:db")
    ys = _grid_linear(grid, scale)
    kind = _LINK[args.link]
    if kind == LinkKind.BACKHAUL:
        raise ConfigError("INR bound covers downlink and uplink")
    model = net.access_model()
    probs = [inr_bound_ccdf(model, net.radio, y, kind=kind) for y in ys]
    write_csv(args.output, ["threshold", "value"], zip(grid, probs))
    return {}


def _cmd_simulate(args, net, sim, canonical, geometry=None):
    grid, scale = parse_grid(args.grid or
                             ("1e6:1e10:25:log" if args.metric == "rate"
                              else "-10:30:41:db"))
    thresholds = _grid_linear(grid, scale)
    kind = _LINK[args.link]
    values, skipped = collect_samples_parallel(args.metric, kind, net, sim,
                                               args.workers, geometry=geometry)
    curve = ccdf_from_samples(values, thresholds, n_skipped=skipped)
    rows = zip(grid, curve.probabilities, curve.ci_low, curve.ci_high)
    write_csv(args.output, ["threshold", "value", "ci_low", "ci_high"], rows)
    return {"n_samples": curve.n_samples, "n_skipped": curve.n_skipped}


def _cmd_validate(args, net, sim, canonical, geometry=None):
    kind = _LINK[args.link]
    if args.metric == "snr":
        grid, scale = parse_grid(args.grid or "-10:30:21:db")
        thresholds = _grid_linear(grid, scale)
        model = _model_for_kind(net, kind)
        analysis = snr_coverage(model, net.radio, kind, thresholds)
        sim_noise_only = dataclasses.replace(sim, interference=False)
        values, skipped = collect_samples_parallel("snr", kind, net,
                                                   sim_noise_only, args.workers,
                                                   geometry=geometry)
    elif args.metric == "rate":
        grid, scale = parse_grid(args.grid or "1e6:1e10:20:log")
        thresholds = _grid_linear(grid, scale)
        access, backhaul, loads = (net.access_model(), net.backhaul_model(),
                                   net.load_model())
        analysis = np.array([rate_coverage(access, backhaul, net.radio, loads,
                                           net.rate, r, link=args.link)
                             for r in thresholds])
        values, skipped = collect_samples_parallel("rate", kind, net, sim,
                                                   args.workers, geometry=geometry)
    elif args.metric == "inr":
        grid, scale = parse_grid(args.grid or "-20:20:17:db")
        thresholds = _grid_linear(grid, scale)
        model = net.access_model()
        analysis = np.array([inr_bound_ccdf(model, net.radio, y, kind=kind)
                             for y in thresholds])
        values, skipped = collect_samples_parallel("inr", kind, net, sim,
                                                   args.workers, geometry=geometry)
    else:
        raise ConfigError(f"unknown validation metric {args.metric!r}")
    curve = ccdf_from_samples(values, thresholds, n_skipped=skipped)
    deviation = float(np.max(np.abs(curve.probabilities - analysis)))
    rows = zip(grid, curve.probabilities, curve.ci_low, curve.ci_high,
               analysis, curve.probabilities)
    write_csv(args.output,
              ["threshold", "value", "ci_low", "ci_high", "analysis", "simulation"],
              rows)
    print(f"max |analysis - simulation| = {deviation:.6f}")
    extras = {"max_abs_deviation": deviation,
              "n_samples": curve.n_samples, "n_skipped": curve.n_skipped}
    if args.metric == "inr":
        extras["max_bound_violation"] = float(
            np.max(curve.probabilities - analysis))
    return extras


def _cmd_contour(args, net, sim, canonical):
    lambdas = [float(x) for x in args.lambda_grid.split(",")]
    result = median_rate_contour(
        net.access, net.access_blockage, net.backhaul, net.backhaul_blockage,
        net.radio, net.rate, user_density=net.user_density,
        target_rate=args.target_rate, lambda_grid=[l * PER_KM2 for l in lambdas],
        link=args.link)
    rows = [(lam / PER_KM2, omega) for lam, omega in result.points]
    write_csv(args.output, ["threshold", "value"], rows)
    extras = {"omitted_lambda_per_km2": [l / PER_KM2 for l in result.omitted]}
    if result.omitted:
        print("unreachable at lambda/km^2:",
              ", ".join(f"{l / PER_KM2:g}" for l in result.omitted))
    return extras


def _cmd_saturation(args, net, sim, canonical):
    lam_sat = saturation_density(
        net.access_model(), net.backhaul_model(), net.radio, net.rate,
        user_density=net.user_density, gamma=args.gamma_per_km2 * PER_KM2,
        delta=args.delta, rho=args.rho, link=args.link)
    write_csv(args.output, ["threshold", "value"],
              [(args.gamma_per_km2, lam_sat / PER_KM2)])
    print(f"saturation density: {lam_sat / PER_KM2:.2f} BS per km^2")
    return {"lambda_sat_per_km2": lam_sat / PER_KM2}


def _cmd_fit_blockage(args, net, sim, canonical):
    buildings = load_buildings(args.buildings)
    d_grid = [float(x) for x in args.d_grid.split(",")]
    cs = fit_blockage_curve(buildings, d_grid, args.samples, sim.seed,
                            n_rays=args.rays, n_radial=args.radial)
    write_csv(args.output, ["threshold", "value"], zip(d_grid, cs))
    return {"samples": args.samples}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mmwcell",
        description="Coverage/rate analysis and Monte Carlo simulation for "
                    "self-backhauled mmWave networks")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid_help):
        sp.add_argument("--config", help="TOML config (or JSON sidecar) path")
        sp.add_argument("--output", required=True, help="CSV output path")
        sp.add_argument("--set", action="append", default=[], dest="overrides",
                        metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
        sp.add_argument("--grid", help=grid_help)
        sp.add_argument("--seed", type=int, help="override the simulation seed")
        sp.add_argument("--trials", type=int, help="override the trial count")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="worker processes for simulation trials")

    sp = sub.add_parser("coverage", help="analytical SNR/SINR coverage curve")
    common(sp, "tau grid min:max:points[:scale], default -10:30:41:db")
    sp.add_argument("--link", choices=list(_LINK), default="downlink")
    sp.add_argument("--quantity",
                    choices=["snr", "fpc", "sinr-fading", "sinr-nofading"],
                    default="snr",
                    help="sinr-nofading is the exact conditional-inversion "
                         "path: tens of seconds per grid point")
    sp.add_argument("--fpc-epsilon", type=float, default=0.5)
    sp.add_argument("--fpc-p0-dbm", type=float, default=20.0)
    sp.add_argument("--activity-thinning", action="store_true")

    sp = sub.add_parser("rate", help="analytical rate coverage curve")
    common(sp, "rate grid in bit/s, default 1e6:1e10:25:log")
    sp.add_argument("--link", choices=["downlink", "uplink"], default="downlink")
    sp.add_argument("--mode", choices=["exact", "meanload", "hybrid"],
                    default="exact")

    sp = sub.add_parser("inr", help="interference-to-noise upper bound curve")
    common(sp, "INR grid, default -20:20:21:db")
    sp.add_argument("--link", choices=["downlink", "uplink"], default="downlink")

    sp = sub.add_parser("simulate", help="Monte Carlo CCDF of a link metric")
    common(sp, "threshold grid; default depends on metric")
    sp.add_argument("--metric", choices=["snr", "sinr", "inr", "rate"],
                    default="snr")
    sp.add_argument("--link", choices=list(_LINK), default="downlink")
    sp.add_argument("--buildings", help="building polygons (polygon blockage)")

    sp = sub.add_parser("validate",
                        help="paired analysis/simulation overlay and max deviation")
    common(sp, "threshold grid; default depends on metric")
    sp.add_argument("--metric", choices=["snr", "rate", "inr"], default="snr")
    sp.add_argument("--link", choices=list(_LINK), default="downlink")
    sp.add_argument("--buildings", help="building polygons (polygon blockage)")

    sp = sub.add_parser("contour",
                        help="wired-fraction/density contour for a median rate")
    common(sp, "(unused)")
    sp.add_argument("--target-rate", type=float, required=True,
                    help="median rate target, bit/s")
    sp.add_argument("--lambda-grid", required=True,
                    help="comma list of BS densities per km^2")
    sp.add_argument("--link", choices=["downlink", "uplink"], default="downlink")

    sp = sub.add_parser("saturation",
                        help="BS density where rate coverage saturates")
    common(sp, "(unused)")
    sp.add_argument("--gamma-per-km2", type=float, required=True,
                    help="fixed wired-BS density per km^2")
    sp.add_argument("--delta", type=float, default=0.02)
    sp.add_argument("--rho", type=float, default=100e6, help="rate target, bit/s")
    sp.add_argument("--link", choices=["downlink", "uplink"], default="downlink")

    sp = sub.add_parser("fit-blockage",
                        help="LOS-ball fit from building footprints")
    common(sp, "(unused)")
    sp.add_argument("--buildings", required=True)
    sp.add_argument("--d-grid", default="50,100,150,200,250",
                    help="comma list of ball radii in meters")
    sp.add_argument("--samples", type=int, default=50)
    sp.add_argument("--rays", type=int, default=256)
    sp.add_argument("--radial", type=int, default=16)
    return p


_COMMANDS = {
    "coverage": _cmd_coverage,
    "rate": _cmd_rate,
    "inr": _cmd_inr,
    "simulate": _cmd_simulate,
    "validate": _cmd_validate,
    "contour": _cmd_contour,
    "saturation": _cmd_saturation,
    "fit-blockage": _cmd_fit_blockage,
}


def run_study(args) -> int:
    t0 = time.time()
    canonical = load_config(args.config, args.overrides)
    if args.seed is not None:
        canonical["sim"]["seed"] = args.seed
    if args.trials is not None:
        canonical["sim"]["trials"] = args.trials
    net = network_from_canonical(canonical)
    sim = sim_from_canonical(canonical)

    geometry = None
    if getattr(args, "buildings", None):
        geometry = load_buildings(args.buildings)

    handler = _COMMANDS[args.command]
    if args.command in ("simulate", "validate"):
        extras = handler(args, net, sim, canonical, geometry=geometry)
    else:
        extras = handler(args, net, sim, canonical)
    write_sidecar(_sidecar_path(args.output), command=args.command,
                  canonical=canonical, seed=canonical["sim"]["seed"],
                  wall_time=time.time() - t0, extras=extras)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run_study(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except UnreachableTargetError as exc:
        print(f"unreachable target: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
