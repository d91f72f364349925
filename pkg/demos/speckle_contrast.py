"""Speckle contrast of simulated patterns, and how blur pulls it toward zero.

Run:  python3 demos/speckle_contrast.py
"""

import numpy as np

from ilsc import Mode, SpeckleParams, blur_image, contrast, generate_speckle, mean_grain_area

# A random-phasor sum with many phasors per pixel is fully developed: K ~ 1.
img = generate_speckle(SpeckleParams(512, 512, mode=Mode.PHASOR, n=1000, seed=1))
stats = contrast(img)
print(f"phasor sum, N=1000: <I>={stats.mean_intensity:.3f}  sigma={stats.sigma:.3f}  K={stats.contrast:.4f}")

# Intensity of fully developed speckle is negative-exponential, so P(I > 2<I>) = exp(-2).
frac = float(np.mean(img.intensities > 2.0))
print(f"fraction above twice the mean: {frac:.4f} (exp(-2) = {np.exp(-2):.4f})")

# The pupil model has correlated grains whose size follows the aperture.
print("\npupil radius  grain area (px)  K")
for radius in (0.1, 0.2, 0.3, 0.5):
    pupil = generate_speckle(SpeckleParams(256, 256, pupil_radius=radius, seed=3))
    print(f"{radius:12.2f}  {mean_grain_area(pupil):15.1f}  {contrast(pupil).contrast:.3f}")

# Any smoothing (motion, defocus, integration) lowers the contrast.
print("\nblur sigma  K")
base = generate_speckle(SpeckleParams(256, 256, seed=3))
for sigma in (0.0, 0.5, 1.0, 2.0, 4.0):
    print(f"{sigma:10.1f}  {contrast(blur_image(base, sigma)).contrast:.3f}")
