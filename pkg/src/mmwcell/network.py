"""Deployment-wide parameter bundle and the dense-urban defaults.

Collects densities, link classes, blockage, radio, and rate parameters in
one immutable object and derives the per-module models from it.  Densities
are stored per square meter; the constructors take the usual per-km^2 and
dB-domain values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .coverage import RadioConfig
from .load import LoadModel
from .numerics import LognormalParams
from .propagation import BlockageParams, LinkClassParams, PropagationModel
from .rate import HybridConfig, RateConfig

PER_KM2 = 1e-6  # one per square km, in per square meter

__all__ = ["NetworkConfig", "default_network", "PER_KM2"]


@dataclass(frozen=True)
class NetworkConfig:
    """Everything the analytical engine and the simulator share: BS/user
    densities (per m^2), the wired fraction, per-link-class propagation and
    blockage, the radio front end, and the rate model."""

    bs_density: float
    abs_fraction: float
    user_density: float
    access: LinkClassParams
    backhaul: LinkClassParams
    access_blockage: BlockageParams
    backhaul_blockage: BlockageParams
    radio: RadioConfig
    rate: RateConfig
    hybrid: HybridConfig | None = None

    def __post_init__(self):
        if self.bs_density <= 0 or self.user_density <= 0:
            raise ValueError("densities must be positive")
        if not 0.0 < self.abs_fraction <= 1.0:
            raise ValueError("abs_fraction must lie in (0, 1]")
        if self.rate.bandwidth_hz != self.radio.bandwidth_hz:
            raise ValueError("rate and radio bandwidth must agree")

    @property
    def kappa(self) -> float:
        return self.user_density / self.bs_density

    def access_model(self) -> PropagationModel:
        return PropagationModel(self.access, self.access_blockage, self.bs_density)

    def backhaul_model(self) -> PropagationModel:
        """The A-BS process seen from a BS: density lambda * omega."""
        return PropagationModel(self.backhaul, self.backhaul_blockage,
                                self.bs_density * self.abs_fraction)

    def load_model(self) -> LoadModel:
        return LoadModel(user_density=self.user_density,
                         bs_density=self.bs_density,
                         abs_fraction=self.abs_fraction)

    def replaced(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)


def default_network(*, bs_density_per_km2: float = 100.0,
                    abs_fraction: float = 1.0,
                    user_density_per_km2: float = 1000.0,
                    bandwidth_hz: float = 2e9,
                    min_mcs_snr: float = 0.0,
                    los_fraction: float = 0.11,
                    ball_radius_m: float = 200.0) -> NetworkConfig:
    """Dense-urban working defaults: 73 GHz carrier, 2 GHz band, 30/20 dBm
    BS/user power, 18/-2 dB sectorized gains with a 10 degree mainlobe,
    measured LOS/NLOS exponents and shadowing for access and backhaul, and
    the Manhattan-fit LOS ball (0.11 within 200 m)."""
    radio = RadioConfig.from_db(bandwidth_hz=bandwidth_hz)
    blockage = BlockageParams(c_inside=los_fraction, d_ball=ball_radius_m)
    return NetworkConfig(
        bs_density=bs_density_per_km2 / 1e6,
        abs_fraction=abs_fraction,
        user_density=user_density_per_km2 / 1e6,
        access=LinkClassParams(alpha_los=2.0, alpha_nlos=3.3,
                               xi_los=5.2, xi_nlos=7.6, beta_db=70.0),
        backhaul=LinkClassParams(alpha_los=2.0, alpha_nlos=3.5,
                                 xi_los=4.2, xi_nlos=7.9, beta_db=70.0),
        access_blockage=blockage,
        backhaul_blockage=blockage,
        radio=radio,
        rate=RateConfig(bandwidth_hz=bandwidth_hz, min_mcs_snr=min_mcs_snr),
        hybrid=HybridConfig(
            uhf_density=5.0 / 1e6,
            uhf_bandwidth_hz=20e6,
            uhf_alpha=4.0,
            # free-space 1 m intercept at 2 GHz carrier, 8 dB shadowing
            uhf_shadow=LognormalParams.from_db(38.5, 8.0),
            uhf_power_mw=10.0 ** 4.6,  # 46 dBm macro
            offload_threshold=10.0 ** (-1.0),  # -10 dB
        ),
    )
