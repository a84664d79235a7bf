"""Constrained least squares (CLS) deconvolution baseline.

Frequency-domain Tikhonov solve with a 3x3 Laplacian smoothness penalty,
exact under the periodic blur model used by :mod:`restore.degrade`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degrade import BlurKernel, _kernel_array
from .errors import ParameterError
from .imagecore import as_image

LAPLACIAN_3X3 = np.array([[0.0, -1.0, 0.0],
                          [-1.0, 4.0, -1.0],
                          [0.0, -1.0, 0.0]])


@dataclass(frozen=True)
class ClsConfig:
    reg_param: float = 0.05

    def __post_init__(self):
        if self.reg_param < 0:
            raise ParameterError(f"regularization parameter must be >= 0, got {self.reg_param}")


def transfer_function(kernel, shape) -> np.ndarray:
    """2-D DFT of a centred odd kernel embedded periodically in ``shape``."""
    w = _kernel_array(kernel)
    k = w.shape[0]
    if k > shape[0] or k > shape[1]:
        raise ParameterError(f"{k}x{k} kernel larger than {shape} image")
    pad = np.zeros(shape)
    h = k // 2
    offs = np.arange(-h, h + 1)
    pad[np.ix_(offs % shape[0], offs % shape[1])] = w
    return np.fft.fft2(pad)


def rp_from_bsnr(bsnr_db: float) -> float:
    """Regularization parameter as the reciprocal of the BSNR in dB."""
    if not bsnr_db > 0:
        raise ParameterError(f"BSNR must be > 0 dB, got {bsnr_db}")
    return 1.0 / bsnr_db


def cls_restore(g, blur: BlurKernel, cfg: ClsConfig | float = ClsConfig()) -> np.ndarray:
    """F = conj(H) G / (|H|^2 + lambda |P|^2), real part of the inverse DFT.

    Frequencies where the denominator vanishes (possible only with
    lambda = 0) are set to zero.
    """
    if not isinstance(cfg, ClsConfig):
        cfg = ClsConfig(reg_param=float(cfg))
    g = as_image(g)
    H = transfer_function(blur, g.shape)
    P = transfer_function(LAPLACIAN_3X3, g.shape)
    G = np.fft.fft2(g)
    denom = np.abs(H) ** 2 + cfg.reg_param * np.abs(P) ** 2
    num = np.conj(H) * G
    F = np.zeros_like(G)
    ok = denom > 0
    F[ok] = num[ok] / denom[ok]
    return np.real(np.fft.ifft2(F))
