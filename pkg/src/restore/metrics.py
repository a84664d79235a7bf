"""Image quality metrics: BSNR, ISNR, MSE/PSNR and ENL, plus CSV reports."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

from .degrade import blurred_power
from .errors import DegenerateInputError, ShapeError
from .imagecore import as_image

REPORT_COLUMNS = ("pipeline", "isnr_db", "bsnr_db", "mse", "psnr_db", "enl")


def _same_shape(*imgs):
    arrs = [as_image(a) for a in imgs]
    if len({a.shape for a in arrs}) != 1:
        raise ShapeError(f"shape mismatch: {[a.shape for a in arrs]}")
    return arrs


def bsnr(blurred_clean, sigma_n: float) -> float:
    """10 log10(mean-removed power of the noiseless blurred image / sigma_n^2)."""
    if not sigma_n > 0:
        raise DegenerateInputError("BSNR undefined for sigma_n = 0")
    power = blurred_power(blurred_clean)
    if power == 0.0:
        raise DegenerateInputError("BSNR undefined for a constant image")
    return 10.0 * math.log10(power / sigma_n ** 2)


def isnr(f, g, f_hat) -> float:
    """10 log10(||f - g||^2 / ||f - f_hat||^2)."""
    f, g, f_hat = _same_shape(f, g, f_hat)
    num = float(np.sum((f - g) ** 2))
    den = float(np.sum((f - f_hat) ** 2))
    if den == 0.0:
        raise DegenerateInputError("restored image equals the original: ISNR is infinite")
    if num == 0.0:
        raise DegenerateInputError("degraded image equals the original: ISNR is -inf")
    return 10.0 * math.log10(num / den)


def mse(f, f_hat) -> float:
    f, f_hat = _same_shape(f, f_hat)
    return float(np.mean((f - f_hat) ** 2))


def psnr(f, f_hat, peak: float = 255.0) -> float:
    e = mse(f, f_hat)
    if e == 0.0:
        raise DegenerateInputError("identical images: PSNR is infinite")
    return 10.0 * math.log10(peak ** 2 / e)


def enl(region) -> float:
    """Equivalent number of looks, mean^2 / variance."""
    r = as_image(region)
    var = float(np.var(r))
    if var == 0.0:
        raise DegenerateInputError("ENL undefined for a zero-variance region")
    return float(np.mean(r)) ** 2 / var


@dataclass
class MetricsReport:
    pipeline: str
    isnr_db: float | None = None
    bsnr_db: float | None = None
    mse: float | None = None
    psnr_db: float | None = None
    enl: float | None = None

    def row(self) -> list[str]:
        out = [self.pipeline]
        for f in fields(self)[1:]:
            v = getattr(self, f.name)
            out.append("" if v is None else f"{v:.6f}")
        return out


def write_report_csv(reports, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow(r.row())


def read_report_csv(path) -> list[MetricsReport]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        MetricsReport(
            pipeline=r["pipeline"],
            **{k: (float(r[k]) if r[k] != "" else None) for k in REPORT_COLUMNS[1:]},
        )
        for r in rows
    ]
