#!/usr/bin/env python3
"""Offloading poor-SNR users to a UHF macro tier.

Users whose mmWave SNR drops below -10 dB fall back to a 5 BS/km^2 UHF
network (alpha = 4, 8 dB shadowing, 20 MHz).  With a minimum-MCS cutoff at
the same threshold, the mmWave-only network strands those users at rate
zero; the hybrid rescues them, and the rescue matters less as the mmWave
tier densifies.
"""

import dataclasses

import numpy as np

from mmwcell.network import default_network
from mmwcell.rate import (hybrid_rate_coverage, make_uhf_coverage,
                          rate_coverage)

tau = 10.0 ** (-1.0)  # -10 dB offload threshold and MCS cutoff
rhos = np.array([1e6, 5e6, 1e7, 5e7, 1e8, 5e8])

for lam_km2 in (30.0, 60.0, 100.0):
    net = default_network(bs_density_per_km2=lam_km2, abs_fraction=1.0,
                          min_mcs_snr=tau)
    hybrid = dataclasses.replace(net.hybrid, offload_threshold=tau)
    access, backhaul, loads = (net.access_model(), net.backhaul_model(),
                               net.load_model())
    uhf = make_uhf_coverage(hybrid, net.radio)
    mm = [rate_coverage(access, backhaul, net.radio, loads, net.rate, r)
          for r in rhos]
    hy = [hybrid_rate_coverage(access, backhaul, net.radio, loads, net.rate,
                               hybrid, r, uhf_coverage=uhf) for r in rhos]
    print(f"\nlambda = {lam_km2:.0f}/km^2")
    print("rho [Mb/s]: ", " ".join(f"{r/1e6:7.0f}" for r in rhos))
    print("mmWave only:", " ".join(f"{v:7.4f}" for v in mm))
    print("hybrid:     ", " ".join(f"{v:7.4f}" for v in hy))
    print(f"offloaded fraction: {hy[0] - mm[0]:.3f} (coverage rescued at low rates)")
