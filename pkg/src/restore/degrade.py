"""Forward degradation: Gaussian blur, additive noise at a target BSNR, speckle.

The linear degradation operator is always a shift-invariant kernel applied
with periodic (circular) boundary handling; no explicit matrix is formed.

Random streams: every stochastic function takes an integer ``seed`` and
draws from ``numpy.random.default_rng(seed)`` (PCG64 seeded through
``SeedSequence``), filling the output in raster order with a single
vectorised call. The same seed therefore always yields the same array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, ParameterError
from .imagecore import as_image

NOISE_KINDS = (
    "additive_gaussian",
    "speckle_amplitude_single_look",
    "speckle_intensity_single_look",
    "speckle_multilook",
)

# Rayleigh scale giving unit mean: E = scale * sqrt(pi / 2)
RAYLEIGH_UNIT_MEAN_SCALE = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class BlurKernel:
    weights: np.ndarray
    variance: float | None = None

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    sigma_n: float = 0.0
    looks: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ParameterError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.sigma_n < 0:
            raise ParameterError(f"sigma_n must be >= 0, got {self.sigma_n}")
        if self.looks < 1:
            raise ParameterError(f"looks must be >= 1, got {self.looks}")


def gaussian_kernel(size: int, variance: float) -> BlurKernel:
    """Unit-volume ``size x size`` Gaussian, h(i,j) = K exp(-(i^2+j^2) / 2 var)."""
    if size < 1 or size % 2 == 0:
        raise ParameterError(f"kernel size must be a positive odd integer, got {size}")
    if not variance > 0:
        raise ParameterError(f"kernel variance must be > 0, got {variance}")
    h = size // 2
    offs = np.arange(-h, h + 1, dtype=np.float64)
    w = np.exp(-(offs[:, None] ** 2 + offs[None, :] ** 2) / (2.0 * variance))
    return BlurKernel(weights=w / w.sum(), variance=float(variance))


def default_kernel_size(variance: float) -> int:
    """Odd support covering +-3 standard deviations."""
    return 2 * math.ceil(3.0 * math.sqrt(variance)) + 1


def _kernel_array(kernel) -> np.ndarray:
    w = kernel.weights if isinstance(kernel, BlurKernel) else np.asarray(kernel, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
        raise ParameterError(f"kernel must be square with odd size, got shape {w.shape}")
    return w


def convolve_periodic(img, kernel) -> np.ndarray:
    """Circular convolution of ``img`` with a centred odd kernel.

    out[r, c] = sum_{i,j} w[i, j] * img[(r - i) mod R, (c - j) mod C], with
    offsets i, j running over [-k//2, k//2]. Terms are accumulated in
    row-major kernel order.
    """
    img = as_image(img)
    w = _kernel_array(kernel)
    k = w.shape[0]
    if k > img.shape[0] or k > img.shape[1]:
        raise ParameterError(f"{k}x{k} kernel larger than {img.shape} image")
    h = k // 2
    out = np.zeros_like(img)
    for i in range(-h, h + 1):
        for j in range(-h, h + 1):
            wij = w[i + h, j + h]
            if wij != 0.0:
                out += wij * np.roll(img, (i, j), axis=(0, 1))
    return out


def convolve_valid(img, mask) -> np.ndarray:
    """Valid-region mask filtering with correlation-style indexing.

    out[i, j] = sum_{p,q} img[i + p, j + q] * mask[p, q] (0-based), so the
    output has R - r + 1 rows and C - c + 1 columns.
    """
    img = as_image(img)
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2:
        raise ParameterError("mask must be 2-D")
    R, C = img.shape
    r, c = m.shape
    if r > R or c > C:
        raise ParameterError(f"{r}x{c} mask larger than {R}x{C} image")
    out = np.zeros((R - r + 1, C - c + 1))
    for p in range(r):
        for q in range(c):
            out += m[p, q] * img[p:p + R - r + 1, q:q + C - c + 1]
    return out


def apply_additive(img, sigma_n: float, seed: int = 0) -> np.ndarray:
    """g = img + n with n ~ N(0, sigma_n^2) i.i.d."""
    img = as_image(img)
    if sigma_n < 0:
        raise ParameterError(f"sigma_n must be >= 0, got {sigma_n}")
    if sigma_n == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    return img + rng.normal(0.0, sigma_n, size=img.shape)


def speckle_field(shape, spec: NoiseSpec) -> np.ndarray:
    """Unit-mean multiplicative speckle S for the given noise kind."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "speckle_amplitude_single_look":
        return rng.rayleigh(RAYLEIGH_UNIT_MEAN_SCALE, size=shape)
    if spec.kind == "speckle_intensity_single_look":
        return rng.exponential(1.0, size=shape)
    if spec.kind == "speckle_multilook":
        return rng.gamma(spec.looks, 1.0 / spec.looks, size=shape)
    raise ParameterError(f"{spec.kind!r} is not a speckle noise kind")


def apply_speckle(img, spec: NoiseSpec) -> np.ndarray:
    """I_s = I * S elementwise, S unit-mean so that E[I_s] = I."""
    img = as_image(img)
    if np.any(img < 0):
        raise DomainError("speckle requires a nonnegative image")
    return img * speckle_field(img.shape, spec)


def additive_speckle(img, speckle) -> np.ndarray:
    """Signal-dependent additive form N = I (S - 1), so I_s = I + N."""
    return as_image(img) * (np.asarray(speckle, dtype=np.float64) - 1.0)


def apply_noise(img, spec: NoiseSpec) -> np.ndarray:
    if spec.kind == "additive_gaussian":
        return apply_additive(img, spec.sigma_n, spec.seed)
    return apply_speckle(img, spec)


def blurred_power(blurred) -> float:
    """Mean-removed power (1/IJ) sum (Df - mean(Df))^2."""
    b = as_image(blurred)
    return float(np.mean((b - b.mean()) ** 2))


def sigma_for_bsnr(blurred, target_bsnr_db: float) -> float:
    """Noise std-dev that puts ``blurred`` at the requested BSNR."""
    var = blurred_power(blurred)
    if var == 0.0:
        raise DegenerateInputError("BSNR undefined for a constant blurred image")
    return math.sqrt(var / 10.0 ** (target_bsnr_db / 10.0))
