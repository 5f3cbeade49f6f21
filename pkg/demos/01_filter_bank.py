"""A tour of the Gabor filter bank.

Builds the default bank (6 orientations, xi = 3pi/4, sigma = 1) on a 64 x 64
grid and looks at how well the wavelets and the lowpass tile the frequency
plane.  The Littlewood-Paley profile

    P(w) = |phi_J(w)|^2 + 1/2 sum_{j, g} (|psi_{j,g}(w)|^2 + |psi_{j,g}(-w)|^2)

is at most 1 everywhere after normalisation.  Where it is close to 1, the
wavelet transform keeps the energy of the image; the frame defect delta
measures the worst loss on the band the wavelets are meant to cover.

Run:  python demos/01_filter_bank.py [grid size]
"""

import sys

import numpy as np

from scatpca.filterbank import (GaborParams, build_filterbank, frequency_grid,
                                littlewood_paley_profile, resolved_annulus)

N = int(sys.argv[1]) if len(sys.argv) > 1 else 64

for J in (1, 2, 3, 4):
    bank = build_filterbank(GaborParams(max_scale=J), (N, N))
    profile = littlewood_paley_profile(bank)
    print(f"J={J}: {J * 6} wavelets, profile max {profile.max():.6f}, "
          f"frame defect on the resolved band {bank.frame_defect:.4f}")

# radial view of the profile for the default J = 3: average over thin rings
bank = build_filterbank(GaborParams(max_scale=3), (N, N))
profile = littlewood_paley_profile(bank)
w0, w1 = frequency_grid((N, N))
radius = np.hypot(w0, w1)
mask = resolved_annulus((N, N), bank.params)
print("\n|w|      min P   mean P   (resolved band marked *)")
edges = np.linspace(0, np.pi * np.sqrt(2), 15)
for lo, hi in zip(edges[:-1], edges[1:]):
    ring = (radius >= lo) & (radius < hi)
    if ring.any():
        star = "*" if mask[ring].all() else ""
        print(f"{lo:4.2f}-{hi:4.2f}  {profile[ring].min():.3f}   {profile[ring].mean():.3f}  {star}")

# the gap between phi_J and the coarsest wavelet explains why some energy is
# lost: the profile dips there, and again in the corners of the DFT square
print(f"\nlowest value anywhere: {profile.min():.3f} at |w| = {radius.flat[profile.argmin()]:.2f}")
