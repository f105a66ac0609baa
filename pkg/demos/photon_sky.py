"""Thermal photons recording the position of a small object.

Photons arrive from a sky patch (a cap of the celestial sphere) with a
blackbody spectrum and scatter off an object sitting at one of two
positions.  The receptivity alpha measures how much of the scattering
disturbance carries photons out of the patch, where they become a record.
A small patch (a point-like source such as the sun) gives alpha close to
one; the full sphere gives zero.
"""
import math

from qdarwin.photon import (
    build_sky_model,
    decoherence_increment,
    decoherence_time,
    photon_chernoff_overlap,
    photon_redundancy_rate,
    receptivity,
)

photon_rate = 1e6  # photons per unit time, supplied from outside the model
delta = 0.1

print(f"{'cap':>6} {'cells':>6} {'alpha':>8} {'kappa':>10} {'tau_D':>10} {'rate':>10}")
for cap_deg in (None, 90, 45, 20, 10):
    cap = None if cap_deg is None else math.radians(cap_deg)
    sky = build_sky_model(800, cap, n_nodes=16)
    kappa = decoherence_increment(sky)
    tau = decoherence_time(sky, photon_rate)
    alpha = receptivity(sky)
    rate = photon_redundancy_rate(alpha, tau, delta)
    label = "sphere" if cap_deg is None else f"{cap_deg} deg"
    print(f"{label:>6} {len(sky.partition.patch_cells):>6} {alpha:8.4f} {kappa:10.3e} {tau:10.3e} {rate:10.3e}")

sky = build_sky_model(800, math.radians(10), n_nodes=16)
o = photon_chernoff_overlap(sky)
print(f"\nper-photon overlap {o:.8f}; 1 - 2 alpha kappa = {1 - 2 * receptivity(sky) * decoherence_increment(sky):.8f}")
