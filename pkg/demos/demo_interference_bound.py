#!/usr/bin/env python3
"""How noise-limited is a directional mmWave network?

Upper-bounds the interference-to-noise ratio by the total received power, a
shot noise over the path-loss process, and inverts its Laplace transform.
The headline numbers: the bound crosses 70% at 0 dB only near 500 BS/km^2 on
the downlink and near 2000/km^2 on the uplink - an order of magnitude above
practical urban densities, which is the case for ignoring interference in
the rate analysis.
"""

import numpy as np

from mmwcell import LinkKind, inr_bound_ccdf
from mmwcell.network import PER_KM2, default_network

net = default_network()
ys_db = np.array([-10.0, -5.0, 0.0, 5.0, 10.0])
ys = 10.0 ** (ys_db / 10.0)

for kind in (LinkKind.DOWNLINK, LinkKind.UPLINK):
    print(f"\nP(INR > y) upper bound, {kind.value}")
    print("y_dB:".ljust(12), " ".join(f"{y:6.0f}" for y in ys_db))
    for lam_km2 in (30.0, 100.0, 200.0, 500.0):
        model = net.access_model().with_density(lam_km2 * PER_KM2)
        bound = [inr_bound_ccdf(model, net.radio, y, kind=kind) for y in ys]
        print(f"{lam_km2:6.0f}/km^2:", " ".join(f"{b:6.3f}" for b in bound))

print("\ninterference exceeds noise (y = 0 dB) with probability 0.7 near:")
for kind, lo, hi in ((LinkKind.DOWNLINK, 200.0, 1500.0),
                     (LinkKind.UPLINK, 800.0, 5000.0)):
    while hi / lo > 1.02:
        mid = np.sqrt(lo * hi)
        model = net.access_model().with_density(mid * PER_KM2)
        if inr_bound_ccdf(model, net.radio, 1.0, kind=kind) >= 0.7:
            hi = mid
        else:
            lo = mid
    print(f"  {kind.value}: ~{np.sqrt(lo * hi):.0f} BS/km^2")
