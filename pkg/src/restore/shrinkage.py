"""Wavelet-domain denoising.

Closed-form MAP shrinkers for y = w + n with Gaussian noise, the mask
(convolution) estimator, the directional smoothing (DS) filter, and the
SmoothShrink despeckler that runs DS over every detail subband.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from ._exactmean import divide, two_sum
from .degrade import convolve_valid
from .errors import ParameterError, ShapeError
from .imagecore import as_image
from .wavelet import HAAR, dwt2_multi, idwt2_multi

RULE_KINDS = ("linear_gaussian", "soft_laplacian", "mask_convolution", "directional_smoothing")

# median(|N(0,1)|)
MAD_SCALE = 0.6745


@dataclass(frozen=True)
class DsConfig:
    kernel_size: int = 3
    n_directions: int = 4

    def __post_init__(self):
        if self.kernel_size % 2 == 0 or not 3 <= self.kernel_size <= 33:
            raise ParameterError(f"DS kernel_size must be odd in [3, 33], got {self.kernel_size}")
        if self.n_directions != 4:
            raise ParameterError("only the 4-direction DS filter is implemented")


@dataclass(frozen=True)
class ShrinkageRule:
    """Which estimator to apply to detail coefficients.

    ``sigma`` / ``sigma_n`` left as None are estimated per subband (see
    :func:`estimate_noise_sigma` and :func:`estimate_signal_sigma`).
    """

    kind: str = "directional_smoothing"
    sigma: float | None = None
    sigma_n: float | None = None
    mask: np.ndarray | None = None
    ds: DsConfig = field(default_factory=DsConfig)

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ParameterError(f"unknown shrinkage rule {self.kind!r}; expected one of {RULE_KINDS}")
        if self.sigma is not None and self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.sigma_n is not None and self.sigma_n < 0:
            raise ParameterError(f"sigma_n must be >= 0, got {self.sigma_n}")
        if self.kind == "mask_convolution" and self.mask is None:
            raise ParameterError("mask_convolution rule needs a mask")


# --- closed-form estimators --------------------------------------------------

def soft(g, tau):
    """sign(g) * (|g| - tau)_+ ; works elementwise on arrays."""
    if np.any(np.asarray(tau) < 0):
        raise ParameterError(f"threshold must be >= 0, got {tau}")
    g = np.asarray(g, dtype=np.float64)
    out = np.sign(g) * np.maximum(np.abs(g) - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def shrink_linear(y, sigma: float, sigma_n: float):
    """Gaussian-prior MAP estimate sigma^2 / (sigma^2 + sigma_n^2) * y."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    gain = sigma ** 2 / (sigma ** 2 + sigma_n ** 2)
    out = gain * np.asarray(y, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


def laplacian_threshold(sigma: float, sigma_n: float) -> float:
    return math.sqrt(2.0) * sigma_n ** 2 / sigma


def shrink_soft_laplacian(y, sigma: float, sigma_n: float):
    """Laplacian-prior MAP estimate: soft threshold at sqrt(2) sigma_n^2 / sigma."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    return soft(y, laplacian_threshold(sigma, sigma_n))


def shrink_mask(y, mask) -> np.ndarray:
    """Mask-convolution estimate on the valid interior; border ring kept as is."""
    y = as_image(y)
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] > y.shape[0] or m.shape[1] > y.shape[1]:
        raise ParameterError(f"mask of shape {m.shape} does not fit {y.shape} subband")
    valid = convolve_valid(y, m)
    out = y.copy()
    r0, c0 = (m.shape[0] - 1) // 2, (m.shape[1] - 1) // 2
    out[r0:r0 + valid.shape[0], c0:c0 + valid.shape[1]] = valid
    return out


def averaging_mask(size: int) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ParameterError(f"mask size must be a positive odd integer, got {size}")
    return np.full((size, size), 1.0 / (size * size))


def map_grid_oracle(y: float, prior: str, sigma: float, sigma_n: float,
                    grid_lo: float, grid_hi: float, grid_step: float) -> float:
    """Brute-force argmax of -(y - w)^2 / 2 sigma_n^2 + log p(w) over a grid.

    ``prior`` is "gaussian" or "laplacian"; ``sigma`` is its scale. Only
    meant for validating the closed forms.
    """
    if not grid_lo < grid_hi or not grid_step > 0:
        raise ParameterError("empty grid")
    n = int(math.floor((grid_hi - grid_lo) / grid_step)) + 1
    w = grid_lo + grid_step * np.arange(n)
    if prior == "gaussian":
        logp = -w ** 2 / (2.0 * sigma ** 2)
    elif prior == "laplacian":
        logp = -math.sqrt(2.0) * np.abs(w) / sigma
    else:
        raise ParameterError(f"unknown prior {prior!r}")
    if sigma_n == 0:
        return float(w[np.argmin(np.abs(y - w))])
    objective = -(y - w) ** 2 / (2.0 * sigma_n ** 2) + logp
    return float(w[np.argmax(objective)])


# --- parameter estimation ----------------------------------------------------

def estimate_noise_sigma(cdd) -> float:
    """Robust noise level median(|CDD|) / 0.6745 from the finest diagonal band."""
    return float(np.median(np.abs(np.asarray(cdd, dtype=np.float64)))) / MAD_SCALE


def estimate_signal_sigma(y, sigma_n: float) -> float:
    """sqrt(max(var(y) - sigma_n^2, 0)); zero means 'no signal detected'."""
    v = float(np.var(np.asarray(y, dtype=np.float64)))
    return math.sqrt(max(v - sigma_n ** 2, 0.0))


# --- directional smoothing ---------------------------------------------------

@numba.njit(cache=True)
def _ds_inplace(x, h):
    rows, cols = x.shape
    k = float(2 * h + 1)
    hi = np.empty(4)
    lo = np.empty(4)
    d = np.empty(4)
    for r in range(h, rows - h):
        for c in range(h, cols - h):
            # horizontal, vertical, main diagonal, anti-diagonal; samples taken
            # from t = -h to h so k = 3 follows the reference term order
            hi[:] = 0.0
            lo[:] = 0.0
            for t in range(-h, h + 1):
                hi[0], e = two_sum(hi[0], x[r, c + t])
                lo[0] += e
                hi[1], e = two_sum(hi[1], x[r + t, c])
                lo[1] += e
                hi[2], e = two_sum(hi[2], x[r + t, c + t])
                lo[2] += e
                hi[3], e = two_sum(hi[3], x[r - t, c + t])
                lo[3] += e
            for n in range(4):
                d[n] = divide(hi[n], lo[n], k)
            v = x[r, c]
            best = 0
            dmin = abs(d[0] - v)
            for n in range(1, 4):
                dn = abs(d[n] - v)
                if dn < dmin:
                    dmin = dn
                    best = n
            x[r, c] = d[best]


def ds_filter(x, kernel_size: int = 3) -> np.ndarray:
    """Directional smoothing with in-place sequential semantics.

    Interior pixels are visited in raster order; each is replaced by the
    directional average (horizontal, vertical, diagonal, anti-diagonal)
    closest to its current value, first direction winning ties. Later pixels
    see already-updated neighbours. Each average is the exact sum divided by
    the sample count, rounded once. The border of width ``kernel_size // 2``
    is left untouched. The input array is not modified.
    """
    cfg = DsConfig(kernel_size=kernel_size)
    out = as_image(x, copy=True)
    if out.shape[0] < cfg.kernel_size or out.shape[1] < cfg.kernel_size:
        raise ShapeError(f"DS with kernel {cfg.kernel_size} needs at least "
                         f"{cfg.kernel_size}x{cfg.kernel_size}, got {out.shape}")
    out = np.ascontiguousarray(out)
    _ds_inplace(out, cfg.kernel_size // 2)
    return out


# --- subband pipelines -------------------------------------------------------

def apply_rule(y, rule: ShrinkageRule, sigma_n: float | None = None) -> np.ndarray:
    """Apply ``rule`` to one detail subband."""
    y = as_image(y)
    if rule.kind == "directional_smoothing":
        return ds_filter(y, rule.ds.kernel_size)
    if rule.kind == "mask_convolution":
        return shrink_mask(y, rule.mask)
    sn = rule.sigma_n if rule.sigma_n is not None else sigma_n
    if sn is None:
        raise ParameterError(f"{rule.kind} needs sigma_n")
    sigma = rule.sigma if rule.sigma is not None else estimate_signal_sigma(y, sn)
    if sigma == 0.0:
        # prior collapsed onto zero: both estimators kill the band
        return np.zeros_like(y)
    if rule.kind == "linear_gaussian":
        return shrink_linear(y, sigma, sn)
    return shrink_soft_laplacian(y, sigma, sn)


def wavelet_shrink(img, rule: ShrinkageRule, family=HAAR, levels: int = 1) -> np.ndarray:
    """DWT, apply ``rule`` to every detail subband (CA untouched), inverse DWT.

    When the rule needs a noise level and none is given, it is estimated once
    from the finest diagonal band.
    """
    bands = dwt2_multi(img, family, levels)
    sigma_n = None
    if rule.kind in ("linear_gaussian", "soft_laplacian") and rule.sigma_n is None:
        sigma_n = estimate_noise_sigma(bands[0].cdd)
    new = [
        sb.replace(
            chd=apply_rule(sb.chd, rule, sigma_n),
            cvd=apply_rule(sb.cvd, rule, sigma_n),
            cdd=apply_rule(sb.cdd, rule, sigma_n),
        )
        for sb in bands
    ]
    return idwt2_multi(new)


def smooth_shrink(img, family=HAAR, levels: int = 1, ds: DsConfig | None = None) -> np.ndarray:
    """SmoothShrink despeckling: DS on CHD, CVD and CDD at each level.

    Works directly on the speckled intensities (no log transform).
    """
    ds = ds or DsConfig()
    img = as_image(img)
    coarsest = (img.shape[0] >> levels, img.shape[1] >> levels)
    if min(coarsest) < ds.kernel_size:
        raise ShapeError(f"subbands at level {levels} are {coarsest}, smaller than the "
                         f"{ds.kernel_size}x{ds.kernel_size} DS window")
    return wavelet_shrink(img, ShrinkageRule(kind="directional_smoothing", ds=ds), family, levels)
