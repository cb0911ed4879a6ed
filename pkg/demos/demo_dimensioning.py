#!/usr/bin/env python3
"""Two dimensioning questions the analytical engine answers in seconds.

1. With the wired-BS density pinned, where does adding more (wireless) BSs
   stop paying?  The saturation density grows with the wired density - the
   backhaul is the eventual bottleneck.
2. Which (density, wired-fraction) pairs deliver a target median rate?  The
   contour trades wired share against site count: sparse networks need most
   BSs wired, dense ones only a third or less.
"""

from mmwcell.network import PER_KM2, default_network
from mmwcell.rate import median_rate_contour, saturation_density

net = default_network()
access, backhaul = net.access_model(), net.backhaul_model()

print("saturation density at 100 Mb/s, 2% margin:")
for gamma_km2 in (10.0, 20.0, 40.0):
    lam_sat = saturation_density(access, backhaul, net.radio, net.rate,
                                 user_density=net.user_density,
                                 gamma=gamma_km2 * PER_KM2, delta=0.02,
                                 rho=100e6)
    print(f"  {gamma_km2:4.0f} wired BS/km^2 -> saturates near "
          f"{lam_sat / PER_KM2:6.1f} BS/km^2 total")

print("\nwired fraction needed for a 400 Mb/s median rate:")
grid = [110.0, 150.0, 200.0]
res = median_rate_contour(net.access, net.access_blockage, net.backhaul,
                          net.backhaul_blockage, net.radio, net.rate,
                          user_density=net.user_density, target_rate=400e6,
                          lambda_grid=[g * PER_KM2 for g in grid])
for lam, omega in res.points:
    print(f"  {lam / PER_KM2:5.0f} BS/km^2 -> omega >= {omega:.3f}")
for lam in res.omitted:
    print(f"  {lam / PER_KM2:5.0f} BS/km^2 -> unreachable even fully wired")
