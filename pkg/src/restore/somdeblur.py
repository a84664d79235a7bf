"""Kohonen SOM deblurring.

Two paths live here:

* the full one-dimensional SOM trained on image patches (decaying learning
  rate and Gaussian neighbourhood), with the distance-graph and calibration
  diagnostics and a vector-quantisation style reconstruction;
* :func:`window_deblur`, the fixed-rate sliding-window sharpener that is
  used as the deblurring stage of the restoration pipeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._exactmean import divide, two_sum
from .errors import ParameterError, ShapeError
from .imagecore import as_image

SCANS = ("ordered", "random")


@dataclass(frozen=True)
class SomConfig:
    """Training schedule for the 1-D map.

    ``sigma0`` defaults to half the network length and ``total_steps`` to a
    hundred times the number of neurons.
    """

    n_neurons: int = 256
    patch_width: int = 3
    alpha0: float = 0.9
    sigma0: float | None = None
    sigma_end: float = 0.1
    total_steps: int | None = None
    scan: str = "ordered"
    seed: int = 0

    def __post_init__(self):
        if self.sigma0 is None:
            object.__setattr__(self, "sigma0", self.n_neurons / 2.0)
        if self.total_steps is None:
            object.__setattr__(self, "total_steps", 100 * self.n_neurons)
        if self.n_neurons < 2:
            raise ParameterError(f"n_neurons must be >= 2, got {self.n_neurons}")
        if self.patch_width < 1 or self.patch_width % 2 == 0:
            raise ParameterError(f"patch_width must be a positive odd integer, got {self.patch_width}")
        if self.total_steps < 2:
            raise ParameterError(f"total_steps must be >= 2, got {self.total_steps}")
        if not 0 <= self.alpha0 <= 1:
            raise ParameterError(f"alpha0 must lie in [0, 1], got {self.alpha0}")
        if not self.sigma_end > 0:
            raise ParameterError(f"sigma_end must be > 0, got {self.sigma_end}")
        if self.sigma0 < self.sigma_end:
            raise ParameterError(f"sigma0 ({self.sigma0}) must be >= sigma_end ({self.sigma_end})")
        if self.scan not in SCANS:
            raise ParameterError(f"scan must be one of {SCANS}, got {self.scan!r}")


@dataclass
class SomMap:
    weights: np.ndarray  # (n, p)
    labels: list = field(default_factory=list)
    quant_error_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError("weights must be an (n, p) array")
        if not np.all(np.isfinite(self.weights)):
            raise ParameterError("weights must be finite")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def p(self) -> int:
        return self.weights.shape[1]

    @property
    def patch_width(self) -> int:
        w = math.isqrt(self.p)
        if w * w != self.p or w % 2 == 0:
            raise ShapeError(f"weight length {self.p} is not an odd square")
        return w


# --- competition and schedules -----------------------------------------------

def _distances(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((weights - x) ** 2, axis=1))


def _check_len(m: SomMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != m.p:
        raise ShapeError(f"input length {x.shape[0]} != weight length {m.p}")
    return x


def winner(m: SomMap, x) -> int:
    """Index of the neuron nearest to ``x``; lowest index wins ties."""
    x = _check_len(m, x)
    return int(np.argmin(_distances(m.weights, x)))


def quant_error(m: SomMap, x) -> float:
    """Distance from ``x`` to its winning neuron."""
    x = _check_len(m, x)
    return float(np.min(_distances(m.weights, x)))


def alpha_schedule(cfg: SomConfig, k: int) -> float:
    T = cfg.total_steps
    if not 0 <= k <= T:
        raise ParameterError(f"step {k} outside [0, {T}]")
    return cfg.alpha0 * (1.0 - k / T)


def sigma_schedule(cfg: SomConfig, k: int) -> float:
    T = cfg.total_steps
    if not 0 <= k <= T - 1:
        raise ParameterError(f"step {k} outside [0, {T - 1}]")
    if k == 0:
        return float(cfg.sigma0)
    if k == T - 1:
        return float(cfg.sigma_end)
    return cfg.sigma0 * (cfg.sigma_end / cfg.sigma0) ** (k / (T - 1))


def kernel_weight(cfg: SomConfig, k: int, leader: int, i: int) -> float:
    """Neighbourhood coefficient alpha_k exp(-|l - i|^2 / 2 sigma_k^2)."""
    a = alpha_schedule(cfg, k)
    d = leader - i
    if d == 0 or a == 0.0:
        return a
    s = sigma_schedule(cfg, k)
    return a * math.exp(-(d * d) / (2.0 * s * s))


# --- training ------------------------------------------------------------------

def image_patches(img, w: int) -> np.ndarray:
    """All fully-inside ``w x w`` patches in raster order, as rows."""
    img = as_image(img)
    if img.shape[0] < w or img.shape[1] < w:
        raise ShapeError(f"{img.shape} image too small for {w}x{w} patches")
    return sliding_window_view(img, (w, w)).reshape(-1, w * w)


def init_map(img, cfg: SomConfig) -> SomMap:
    """Weights drawn uniformly over the image's value range."""
    img = as_image(img)
    rng = np.random.default_rng(cfg.seed)
    lo, hi = float(img.min()), float(img.max())
    w = rng.uniform(lo, hi, size=(cfg.n_neurons, cfg.patch_width ** 2))
    return SomMap(weights=w)


def som_train(img, cfg: SomConfig, initial: SomMap | None = None) -> SomMap:
    """Train a 1-D SOM on the image's patches for ``cfg.total_steps`` steps.

    Ordered scan cycles through interior patch positions in raster order;
    random scan draws positions from the seeded generator (after the weight
    initialisation draws). Each step records the input's quantisation error
    against the map left by the previous step, then updates every neuron.
    """
    patches = image_patches(img, cfg.patch_width)
    m = initial if initial is not None else init_map(img, cfg)
    weights = m.weights.copy()
    if weights.shape != (cfg.n_neurons, cfg.patch_width ** 2):
        raise ShapeError(f"initial map shape {weights.shape} does not match config")
    T = cfg.total_steps
    if cfg.scan == "ordered":
        order = np.arange(T) % len(patches)
    else:
        rng = np.random.default_rng([cfg.seed, 1])
        order = rng.integers(0, len(patches), size=T)

    idx = np.arange(cfg.n_neurons, dtype=np.float64)
    trace = np.empty(T)
    for k in range(T):
        x = patches[order[k]]
        diff = x - weights
        dist2 = np.sum(diff * diff, axis=1)
        lead = int(np.argmin(dist2))
        trace[k] = math.sqrt(dist2[lead])
        a = alpha_schedule(cfg, k)
        s = sigma_schedule(cfg, k)
        h = a * np.exp(-((idx - lead) ** 2) / (2.0 * s * s))
        weights += h[:, None] * diff
    return SomMap(weights=weights, labels=list(m.labels), quant_error_trace=trace)


# --- diagnostics ---------------------------------------------------------------

def distance_graph(m: SomMap) -> np.ndarray:
    """Euclidean norm of each neuron's weights (distance to the zero vector)."""
    return np.sqrt(np.sum(m.weights ** 2, axis=1))


def max_successive_distance(m: SomMap) -> float:
    g = distance_graph(m)
    return float(np.max(np.abs(np.diff(g)))) if len(g) > 1 else 0.0


def calibrate(m: SomMap, threshold_ratio: float = 2.0) -> SomMap:
    """Label each neuron "edge" or "mean" by its weight-vector variance.

    A neuron is an edge detector when its variance exceeds
    ``threshold_ratio`` times the median variance over the map.
    """
    var = np.var(m.weights, axis=1)
    cut = threshold_ratio * float(np.median(var))
    labels = ["edge" if v > cut else "mean" for v in var]
    return replace(m, weights=m.weights.copy(), labels=labels)


# --- reconstruction ------------------------------------------------------------

def som_reconstruct(img, m: SomMap, chunk: int = 1024) -> np.ndarray:
    """Replace each interior pixel by its patch winner's centre weight."""
    img = as_image(img)
    w = m.patch_width
    patches = image_patches(img, w)
    centre = (w * w) // 2
    winners = np.empty(len(patches), dtype=np.int64)
    for s in range(0, len(patches), chunk):
        block = patches[s:s + chunk]
        d = np.sum((block[:, None, :] - m.weights[None, :, :]) ** 2, axis=2)
        winners[s:s + chunk] = np.argmin(d, axis=1)
    h = w // 2
    out = img.copy()
    inner = (img.shape[0] - 2 * h, img.shape[1] - 2 * h)
    out[h:img.shape[0] - h, h:img.shape[1] - h] = m.weights[winners, centre].reshape(inner)
    return out


@numba.njit(cache=True)
def _window_deblur_inplace(I, width, alfa):
    rows, cols = I.shape
    d = width // 2
    n = float(width * width)
    for r in range(d, rows - d):
        for c in range(d, cols - d):
            hi = 0.0
            lo = 0.0
            for i in range(r - d, r + d + 1):
                for j in range(c - d, c + d + 1):
                    hi, e = two_sum(hi, I[i, j])
                    lo += e
            e = I[r, c] - divide(hi, lo, n)
            I[r, c] = I[r, c] + alfa * e


def window_deblur(img, sigma: int = 3, alfa: float = 0.5) -> np.ndarray:
    """Sliding-window sharpening with fixed rate ``alfa``.

    Interior pixels are visited in raster order; each moves away from the
    mean of its current ``sigma x sigma`` neighbourhood by ``alfa`` times the
    difference. Updates are in place, so later windows see earlier results.
    The window mean is the exact sum divided by the window size, rounded once.
    A border of width ``sigma // 2`` is copied unchanged.
    """
    out = as_image(img, copy=True)
    if sigma < 1 or sigma % 2 == 0:
        raise ParameterError(f"window width must be odd, got {sigma}")
    if sigma < 3 or sigma > min(out.shape):
        raise ParameterError(f"window width {sigma} outside [3, {min(out.shape)}]")
    out = np.ascontiguousarray(out)
    _window_deblur_inplace(out, int(sigma), float(alfa))
    return out


# --- map file format -------------------------------------------------------------

def save_map(m: SomMap, path) -> None:
    """Plain text: "SOMMAP n p", n weight rows, then one labels line."""
    lines = [f"SOMMAP {m.n} {m.p}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in m.weights]
    labels = m.labels if m.labels else ["unlabeled"] * m.n
    lines.append(" ".join(labels))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_map(path) -> SomMap:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 3 or head[0] != "SOMMAP":
        raise ParameterError(f"{path}: missing 'SOMMAP n p' header")
    n, p = int(head[1]), int(head[2])
    if len(lines) < n + 2:
        raise ParameterError(f"{path}: expected {n} weight rows and a labels line")
    weights = np.array([[float(t) for t in lines[1 + i].split()] for i in range(n)])
    if weights.shape != (n, p):
        raise ShapeError(f"{path}: weight block is {weights.shape}, header says ({n}, {p})")
    labels = lines[1 + n].split()
    if len(labels) != n:
        raise ParameterError(f"{path}: {len(labels)} labels for {n} neurons")
    if all(lab == "unlabeled" for lab in labels):
        labels = []
    return SomMap(weights=weights, labels=labels)
