"""Deterministic synthetic test images."""
from __future__ import annotations

import numpy as np


def piecewise_constant(size: int = 128) -> np.ndarray:
    """Flat regions with straight and curved edges, values in [40, 220]."""
    img = np.full((size, size), 60.0)
    yy, xx = np.mgrid[0:size, 0:size] / size
    img[(yy > 0.15) & (yy < 0.45) & (xx > 0.1) & (xx < 0.55)] = 180.0
    img[(yy - 0.68) ** 2 + (xx - 0.68) ** 2 < 0.22 ** 2] = 120.0
    img[(yy > 0.6) & (yy < 0.9) & (xx > 0.12) & (xx < 0.3)] = 220.0
    img[(yy > 0.1) & (yy < 0.35) & (xx > 0.7) & (xx < 0.9)] = 40.0
    return img


def natural_texture(size: int = 128, seed: int = 0) -> np.ndarray:
    """1/f-type random field over a few shapes, rescaled to [20, 235]."""
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    radius = np.sqrt(fx ** 2 + fy ** 2)
    radius[0, 0] = 1.0
    spectrum = (rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))) / radius ** 1.5
    spectrum[0, 0] = 0.0
    field = np.real(np.fft.ifft2(spectrum))
    field = (field - field.mean()) / field.std()
    img = 0.6 * field + 0.4 * (piecewise_constant(size) - 130.0) / 60.0
    lo, hi = img.min(), img.max()
    return 20.0 + 215.0 * (img - lo) / (hi - lo)


def ramp(size: int = 64) -> np.ndarray:
    """Linear ramp along the diagonal, 0 to 254."""
    yy, xx = np.mgrid[0:size, 0:size]
    return 254.0 * (yy + xx) / (2 * (size - 1))
