"""Scattering coefficients: invariance, stability and energy.

Compares how scattering distances react to a translation and to a small
dilation as the averaging scale 2^J grows, and shows where the energy of an
image goes through the cascade.

Run:  python demos/02_scattering_properties.py
"""

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from scatpca.engine import periodic_shift
from scatpca.filterbank import build_filterbank
from scatpca.scattering import (Scattering, ScatteringConfig, energy_accounting,
                                frequency_decreasing_diagnostic, num_paths,
                                scattering_distance)

rng = np.random.default_rng(0)
image = gaussian_filter(rng.standard_normal((64, 64)), 1.5, mode="wrap")
image /= np.linalg.norm(image)

print("paths per configuration (L = 6 orientations, depth 2):")
for J in range(1, 6):
    print(f"  J={J}: {num_paths(J, 6, 2)} paths")

# translation: the Euclidean distance between an image and its shift is
# large, the scattering distance shrinks as the window grows
shifted = periodic_shift(image, (4, 0))
print(f"\n||f - f_shift|| = {np.linalg.norm(image - shifted):.3f}")
for J in (1, 2, 3, 4):
    op = Scattering((64, 64), J=J)
    d = scattering_distance(op(image), op(shifted))
    print(f"  J={J}: ||S f - S f_shift|| = {d:.4f}")

# dilation by (1 - eps) around the centre: the scattering distance grows
# linearly with the size of the deformation
y, x = np.mgrid[0:64, 0:64].astype(float)
c = 31.5
op = Scattering((64, 64), J=3)
ref = op(image)
print("\ndilation x -> x - eps (x - c), J = 3:")
for eps in (0.02, 0.04, 0.08):
    coords = np.stack([y - eps * (y - c), x - eps * (x - c)])
    warped = map_coordinates(image, coords, order=3, mode="grid-wrap")
    d = scattering_distance(op(warped), ref)
    print(f"  eps={eps:.2f}: distance {d:.4f}, distance / eps {d / eps:.3f}")

# energy bookkeeping through the cascade
print("\nenergy kept by the averaged layers (fraction of ||f||^2):")
for J in (1, 2, 3):
    config = ScatteringConfig(J=J, m0=2)
    bank = build_filterbank(config.params, (64, 64))
    acc = energy_accounting(image, config, bank)
    layers = ", ".join(f"{e / acc['input']:.3f}" for e in acc["averaged_layers"])
    print(f"  J={J}: layers [{layers}], deepest (unaveraged) "
          f"{acc['deepest_unaveraged'] / acc['input']:.3f}, total {acc['ratio']:.3f}")

kept, dropped = frequency_decreasing_diagnostic(image, build_filterbank(
    ScatteringConfig(J=3).params, (64, 64)))
print(f"\nsecond layer energy on kept paths (j2 > j1): {kept:.4f}, "
      f"on skipped paths (j2 <= j1): {dropped:.4f}")
