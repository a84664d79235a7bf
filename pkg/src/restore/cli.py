"""Command-line front end: ``restore run <config>`` and single-stage shortcuts.

Config files are UTF-8 ``key = value`` lines with ``#`` comments::

    input = scene.pgm            # or phantom:piecewise:128 / phantom:texture:128
    outdir = out
    seed = 42
    metrics = isnr,bsnr,mse,psnr,enl
    stage.0.name = degrade
    stage.0.blur_variance = 1.5
    stage.0.noise = additive_gaussian
    stage.0.bsnr_db = 20
    stage.1.name = window_deblur
    stage.1.sigma = 3

Stage ``i`` writes ``<outdir>/<i>_<name>.pgm``; a ``metrics.csv`` row is
written per stage. Stochastic stages draw from a seed derived from the
global seed and the stage index (``SeedSequence([seed, i])``).

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, degrade, metrics, phantoms, shrinkage, somdeblur
from .errors import DegenerateInputError, RestoreError
from .imagecore import load_image, save_image

log = logging.getLogger("restore")

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3
METRIC_NAMES = ("isnr", "bsnr", "mse", "psnr", "enl")


class ConfigError(RestoreError):
    """One or more invalid configuration entries."""

    def __init__(self, problems):
        self.problems = list(problems) if not isinstance(problems, str) else [problems]
        super().__init__("; ".join(self.problems))


class StageError(RestoreError):
    pass


# --- stage parameter schemas ---------------------------------------------------

def _odd(v):
    if v % 2 == 0:
        raise ValueError("must be odd")


def _positive(v):
    if not v > 0:
        raise ValueError("must be > 0")


def _nonneg(v):
    if v < 0:
        raise ValueError("must be >= 0")


def _at_least(n):
    def check(v):
        if v < n:
            raise ValueError(f"must be >= {n}")
    return check


def _one_of(*opts):
    def check(v):
        if v not in opts:
            raise ValueError(f"must be one of {', '.join(opts)}")
    return check


def _reg_param(text: str):
    return text if text == "auto" else float(text)


def _check_reg(v):
    if v != "auto" and v < 0:
        raise ValueError("must be >= 0 or 'auto'")


NOISE_CHOICES = ("none",) + degrade.NOISE_KINDS

# name -> {param: (parser, validator)}
STAGES = {
    "degrade": {
        "blur_variance": (float, _nonneg),
        "blur_size": (int, lambda v: (_positive(v), _odd(v))),
        "noise": (str, _one_of(*NOISE_CHOICES)),
        "bsnr_db": (float, None),
        "sigma_n": (float, _nonneg),
        "looks": (int, _at_least(1)),
    },
    "smooth_shrink": {
        "family": (str, _one_of("haar", "db4")),
        "levels": (int, _at_least(1)),
        "kernel_size": (int, lambda v: (_odd(v), _at_least(3)(v))),
    },
    "shrink": {
        "rule": (str, _one_of("linear_gaussian", "soft_laplacian", "mask_convolution")),
        "family": (str, _one_of("haar", "db4")),
        "levels": (int, _at_least(1)),
        "sigma": (float, _positive),
        "sigma_n": (float, _nonneg),
        "mask_size": (int, lambda v: (_positive(v), _odd(v))),
    },
    "som_train": {
        "n_neurons": (int, _at_least(2)),
        "patch_width": (int, lambda v: (_positive(v), _odd(v))),
        "alpha0": (float, _nonneg),
        "sigma0": (float, _positive),
        "sigma_end": (float, _positive),
        "total_steps": (int, _at_least(2)),
        "scan": (str, _one_of("ordered", "random")),
        "threshold_ratio": (float, _nonneg),
    },
    "window_deblur": {
        "sigma": (int, lambda v: (_odd(v), _at_least(3)(v))),
        "alfa": (float, None),
    },
    "cls": {
        "reg_param": (_reg_param, _check_reg),
        "blur_variance": (float, _positive),
        "blur_size": (int, lambda v: (_positive(v), _odd(v))),
    },
}


@dataclass
class StageSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class PipelineConfig:
    input: str
    outdir: str = "out"
    stages: list = field(default_factory=list)
    metrics: tuple = METRIC_NAMES
    seed: int = 0
    enl_region: tuple | None = None  # (r0, r1, c0, c1), half-open


# --- parsing -------------------------------------------------------------------

_STAGE_KEY = re.compile(r"^stage\.(\d+)\.([A-Za-z_][A-Za-z0-9_]*)$")


def _parse_region(text: str):
    m = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+)\s*,\s*(\d+)\s*:\s*(\d+)\s*", text)
    if not m:
        raise ValueError("expected r0:r1,c0:c1")
    r0, r1, c0, c1 = map(int, m.groups())
    if r1 <= r0 or c1 <= c0:
        raise ValueError("empty region")
    return (r0, r1, c0, c1)


def _parse_metrics(text: str):
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [n for n in names if n not in METRIC_NAMES]
    if bad:
        raise ValueError(f"unknown metrics {bad}; choose from {', '.join(METRIC_NAMES)}")
    return names


def parse_config_text(text: str) -> PipelineConfig:
    problems = []
    top = {}
    stage_raw: dict[int, dict] = {}
    stage_lines: dict[int, dict] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        m = _STAGE_KEY.match(key)
        if m:
            idx, param = int(m.group(1)), m.group(2)
            slot = stage_raw.setdefault(idx, {})
            if param in slot:
                what = "duplicate stage index" if param == "name" else "duplicate parameter"
                problems.append(f"line {lineno}: stage {idx}: {what} '{key}'")
                continue
            slot[param] = value
            stage_lines.setdefault(idx, {})[param] = lineno
            continue
        if key in top:
            problems.append(f"line {lineno}: duplicate key '{key}'")
            continue
        try:
            if key in ("input", "outdir"):
                if not value:
                    raise ValueError("must not be empty")
                top[key] = value
            elif key == "seed":
                top[key] = int(value)
            elif key == "metrics":
                top[key] = _parse_metrics(value)
            elif key == "enl_region":
                top[key] = _parse_region(value)
            else:
                problems.append(f"line {lineno}: unknown key '{key}'")
        except ValueError as exc:
            problems.append(f"line {lineno}: {key}: {exc}")

    stages = []
    for idx in sorted(stage_raw):
        raw = stage_raw[idx]
        lines = stage_lines[idx]
        name = raw.pop("name", None)
        if name is None:
            problems.append(f"stage {idx}: missing stage.{idx}.name")
            continue
        if name not in STAGES:
            problems.append(f"line {lines['name']}: stage {idx}: unknown stage '{name}'")
            continue
        schema = STAGES[name]
        params = {}
        for param, value in raw.items():
            where = f"line {lines[param]}: stage {idx} ({name}): {param}"
            if param not in schema:
                problems.append(f"{where}: unknown parameter")
                continue
            parse, check = schema[param]
            try:
                v = parse(value)
                if check is not None:
                    check(v)
            except ValueError as exc:
                problems.append(f"{where}: {exc}")
                continue
            params[param] = v
        stages.append(StageSpec(name, params))

    if not stage_raw:
        problems.append("no stages")
    if "input" not in top:
        problems.append("missing key 'input'")
    if problems:
        raise ConfigError(problems)
    return PipelineConfig(stages=stages, **top)


def parse_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def serialize_config(cfg: PipelineConfig) -> str:
    lines = [f"input = {cfg.input}", f"outdir = {cfg.outdir}", f"seed = {cfg.seed}",
             f"metrics = {','.join(cfg.metrics)}"]
    if cfg.enl_region is not None:
        r0, r1, c0, c1 = cfg.enl_region
        lines.append(f"enl_region = {r0}:{r1},{c0}:{c1}")
    for i, st in enumerate(cfg.stages):
        lines.append(f"stage.{i}.name = {st.name}")
        for k, v in st.params.items():
            lines.append(f"stage.{i}.{k} = {v!r}" if isinstance(v, float) else f"stage.{i}.{k} = {v}")
    return "\n".join(lines) + "\n"


# --- input resolution ------------------------------------------------------------

def resolve_input(spec: str) -> np.ndarray:
    """Load an image path or build a ``phantom:<piecewise|texture|ramp>[:size]``."""
    if spec.startswith("phantom:"):
        parts = spec.split(":")
        kind = parts[1] if len(parts) > 1 else ""
        size = int(parts[2]) if len(parts) > 2 else 128
        makers = {"piecewise": phantoms.piecewise_constant,
                  "texture": phantoms.natural_texture,
                  "ramp": phantoms.ramp}
        if kind not in makers:
            raise ConfigError(f"input: unknown phantom '{kind}'")
        # quantise like a real 8-bit scene
        return np.floor(makers[kind](size) + 0.5)
    if not os.path.isfile(spec):
        raise ConfigError(f"input: file not found: {spec}")
    try:
        return load_image(spec)
    except (OSError, RestoreError) as exc:
        raise ConfigError(f"input: {exc}") from exc


# --- stage execution -----------------------------------------------------------------

@dataclass
class RunContext:
    seed: int = 0
    original: np.ndarray | None = None
    degraded: np.ndarray | None = None
    blur: degrade.BlurKernel | None = None
    bsnr_db: float | None = None
    artifacts: dict = field(default_factory=dict)


def stage_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _blur_from(params) -> degrade.BlurKernel | None:
    var = params.get("blur_variance", 0.0)
    if not var:
        return None
    size = params.get("blur_size") or degrade.default_kernel_size(var)
    return degrade.gaussian_kernel(size, var)


def run_stage(index: int, st: StageSpec, img: np.ndarray, ctx: RunContext) -> np.ndarray:
    p = st.params
    if st.name == "degrade":
        blur = _blur_from(p)
        blurred = degrade.convolve_periodic(img, blur) if blur is not None else img.copy()
        noise = p.get("noise", "none")
        seed = stage_seed(ctx.seed, index)
        ctx.blur, ctx.bsnr_db = blur, None
        if noise == "none":
            out = blurred
        elif noise == "additive_gaussian":
            if "bsnr_db" in p and "sigma_n" in p:
                raise StageError("give either bsnr_db or sigma_n, not both")
            if "bsnr_db" in p:
                sigma_n = degrade.sigma_for_bsnr(blurred, p["bsnr_db"])
            elif "sigma_n" in p:
                sigma_n = p["sigma_n"]
            else:
                raise StageError("additive_gaussian needs bsnr_db or sigma_n")
            out = degrade.apply_additive(blurred, sigma_n, seed)
            if sigma_n > 0:
                try:
                    ctx.bsnr_db = metrics.bsnr(blurred, sigma_n)
                except DegenerateInputError:
                    pass
        else:
            spec = degrade.NoiseSpec(kind=noise, looks=p.get("looks", 1), seed=seed)
            out = degrade.apply_speckle(blurred, spec)
        ctx.degraded = out
        return out
    if st.name == "smooth_shrink":
        ds = shrinkage.DsConfig(kernel_size=p.get("kernel_size", 3))
        return shrinkage.smooth_shrink(img, p.get("family", "haar"), p.get("levels", 1), ds)
    if st.name == "shrink":
        kind = p.get("rule", "soft_laplacian")
        mask = shrinkage.averaging_mask(p.get("mask_size", 3)) if kind == "mask_convolution" else None
        rule = shrinkage.ShrinkageRule(kind=kind, sigma=p.get("sigma"), sigma_n=p.get("sigma_n"), mask=mask)
        return shrinkage.wavelet_shrink(img, rule, p.get("family", "haar"), p.get("levels", 1))
    if st.name == "som_train":
        cfg = somdeblur.SomConfig(
            n_neurons=p.get("n_neurons", 256),
            patch_width=p.get("patch_width", 3),
            alpha0=p.get("alpha0", 0.9),
            sigma0=p.get("sigma0"),
            sigma_end=p.get("sigma_end", 0.1),
            total_steps=p.get("total_steps"),
            scan=p.get("scan", "ordered"),
            seed=stage_seed(ctx.seed, index),
        )
        m = somdeblur.calibrate(somdeblur.som_train(img, cfg), p.get("threshold_ratio", 2.0))
        ctx.artifacts[index] = m
        return somdeblur.som_reconstruct(img, m)
    if st.name == "window_deblur":
        return somdeblur.window_deblur(img, p.get("sigma", 3), p.get("alfa", 0.5))
    if st.name == "cls":
        blur = _blur_from(p) if "blur_variance" in p else ctx.blur
        if blur is None:
            raise StageError("no blur kernel: set blur_variance or run a blurring degrade stage first")
        reg = p.get("reg_param", "auto")
        if reg == "auto":
            if ctx.bsnr_db is None:
                raise StageError("reg_param = auto needs a preceding additive-noise degrade stage")
            reg = baselines.rp_from_bsnr(ctx.bsnr_db)
        return baselines.cls_restore(img, blur, baselines.ClsConfig(reg_param=reg))
    raise StageError(f"unknown stage {st.name!r}")


def _maybe(fn, *args):
    try:
        return fn(*args)
    except DegenerateInputError:
        return None


def score(label: str, img: np.ndarray, ctx: RunContext, wanted, enl_region=None) -> metrics.MetricsReport:
    rep = metrics.MetricsReport(pipeline=label)
    f = ctx.original
    if "isnr" in wanted and ctx.degraded is not None:
        rep.isnr_db = _maybe(metrics.isnr, f, ctx.degraded, img)
    if "bsnr" in wanted:
        rep.bsnr_db = ctx.bsnr_db
    if "mse" in wanted:
        rep.mse = metrics.mse(f, img)
    if "psnr" in wanted:
        rep.psnr_db = _maybe(metrics.psnr, f, img)
    if "enl" in wanted:
        region = img
        if enl_region is not None:
            r0, r1, c0, c1 = enl_region
            region = img[r0:r1, c0:c1]
        rep.enl = _maybe(metrics.enl, region) if region.size else None
    return rep


def run(cfg: PipelineConfig) -> int:
    """Execute the configured pipeline; returns the process exit code."""
    try:
        img = resolve_input(cfg.input)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(seed=cfg.seed, original=img)
    reports = []
    status = EXIT_OK
    for i, st in enumerate(cfg.stages):
        log.info("stage %d: %s %s", i, st.name, st.params)
        try:
            img = run_stage(i, st, img, ctx)
        except (RestoreError, ValueError) as exc:
            log.error("stage %d (%s): %s", i, st.name, exc)
            status = EXIT_STAGE
            break
        label = f"{i}_{st.name}"
        save_image(img, outdir / f"{label}.pgm")
        if i in ctx.artifacts:
            somdeblur.save_map(ctx.artifacts[i], outdir / f"{label}.sommap")
        reports.append(score(label, img, ctx, cfg.metrics, cfg.enl_region))
    metrics.write_report_csv(reports, outdir / "metrics.csv")
    return status


# --- argument parsing --------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--quiet", action="store_true", help="suppress log output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="restore", description="Despeckle/deblur image restoration pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a pipeline config file")
    p.add_argument("config")
    p.add_argument("--input")
    p.add_argument("--outdir")
    p.add_argument("--seed", type=int)
    _add_common(p)

    p = sub.add_parser("degrade", help="blur and/or add noise")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--blur-variance", type=float, default=0.0)
    p.add_argument("--blur-size", type=int)
    p.add_argument("--noise", default="none", choices=NOISE_CHOICES)
    p.add_argument("--bsnr-db", type=float)
    p.add_argument("--sigma-n", type=float)
    p.add_argument("--looks", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("denoise", help="wavelet-domain denoising")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", default="smooth_shrink",
                   choices=("smooth_shrink", "linear_gaussian", "soft_laplacian", "mask_convolution"))
    p.add_argument("--family", default="haar", choices=("haar", "db4"))
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--kernel-size", type=int, default=3)
    p.add_argument("--mask-size", type=int, default=3)
    p.add_argument("--sigma", type=float)
    p.add_argument("--sigma-n", type=float)
    _add_common(p)

    p = sub.add_parser("deblur", help="sliding-window SOM, trained SOM or CLS deblurring")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", default="window", choices=("window", "som", "cls"))
    p.add_argument("--sigma", type=int, default=3, help="window width (window method)")
    p.add_argument("--alfa", type=float, default=0.5)
    p.add_argument("--n-neurons", type=int, default=256)
    p.add_argument("--patch-width", type=int, default=3)
    p.add_argument("--total-steps", type=int)
    p.add_argument("--scan", default="ordered", choices=("ordered", "random"))
    p.add_argument("--map-out", help="write the trained map here (som method)")
    p.add_argument("--reg-param", type=float, default=0.05)
    p.add_argument("--blur-variance", type=float, default=1.5)
    p.add_argument("--blur-size", type=int)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("score", help="compute metrics for a restored image")
    p.add_argument("--original", required=True)
    p.add_argument("--degraded")
    p.add_argument("--restored", required=True)
    p.add_argument("--blurred", help="noiseless blurred image, for BSNR")
    p.add_argument("--sigma-n", type=float, help="noise std-dev, for BSNR")
    p.add_argument("--label", default="restored")
    p.add_argument("--csv", help="write a metrics CSV here")
    _add_common(p)
    return ap


def _single_stage(args, st: StageSpec) -> int:
    """Run one stage from the shortcut subcommands."""
    try:
        img = resolve_input(args.input)
        problems = []
        for k, v in st.params.items():
            _parse, check = STAGES[st.name][k]
            try:
                if check is not None:
                    check(v)
            except ValueError as exc:
                problems.append(f"stage 0 ({st.name}): {k}: {exc}")
        if problems:
            raise ConfigError(problems)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    ctx = RunContext(seed=getattr(args, "seed", 0), original=img)
    try:
        out = run_stage(0, st, img, ctx)
    except (RestoreError, ValueError) as exc:
        log.error("stage 0 (%s): %s", st.name, exc)
        return EXIT_STAGE
    save_image(out, args.output)
    if 0 in ctx.artifacts and getattr(args, "map_out", None):
        somdeblur.save_map(ctx.artifacts[0], args.map_out)
    return EXIT_OK


def _drop_none(d):
    return {k: v for k, v in d.items() if v is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")

    if args.command == "run":
        try:
            cfg = parse_config(args.config)
        except ConfigError as exc:
            for prob in exc.problems:
                log.error("%s: %s", args.config, prob)
            return EXIT_CONFIG
        env_seed = os.environ.get("RESTORE_SEED")
        if env_seed is not None:
            try:
                cfg.seed = int(env_seed)
            except ValueError:
                log.error("RESTORE_SEED must be an integer, got %r", env_seed)
                return EXIT_CONFIG
        for key in ("input", "outdir", "seed"):
            flag = getattr(args, key)
            if flag is not None:
                if flag != getattr(cfg, key):
                    log.warning("--%s overrides config value %r", key, getattr(cfg, key))
                setattr(cfg, key, flag)
        return run(cfg)

    if args.command == "degrade":
        params = _drop_none({
            "blur_variance": args.blur_variance or None, "blur_size": args.blur_size,
            "noise": args.noise, "bsnr_db": args.bsnr_db, "sigma_n": args.sigma_n, "looks": args.looks,
        })
        return _single_stage(args, StageSpec("degrade", params))

    if args.command == "denoise":
        if args.method == "smooth_shrink":
            st = StageSpec("smooth_shrink", {"family": args.family, "levels": args.levels,
                                             "kernel_size": args.kernel_size})
        else:
            st = StageSpec("shrink", _drop_none({
                "rule": args.method, "family": args.family, "levels": args.levels,
                "sigma": args.sigma, "sigma_n": args.sigma_n, "mask_size": args.mask_size,
            }))
        return _single_stage(args, st)

    if args.command == "deblur":
        if args.method == "window":
            st = StageSpec("window_deblur", {"sigma": args.sigma, "alfa": args.alfa})
        elif args.method == "som":
            st = StageSpec("som_train", _drop_none({
                "n_neurons": args.n_neurons, "patch_width": args.patch_width,
                "total_steps": args.total_steps, "scan": args.scan,
            }))
        else:
            st = StageSpec("cls", _drop_none({
                "reg_param": args.reg_param, "blur_variance": args.blur_variance,
                "blur_size": args.blur_size,
            }))
        return _single_stage(args, st)

    if args.command == "score":
        try:
            f = resolve_input(args.original)
            fh = resolve_input(args.restored)
            g = resolve_input(args.degraded) if args.degraded else None
            b = resolve_input(args.blurred) if args.blurred else None
        except ConfigError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        try:
            ctx = RunContext(original=f, degraded=g)
            if b is not None and args.sigma_n:
                ctx.bsnr_db = metrics.bsnr(b, args.sigma_n)
            rep = score(args.label, fh, ctx, METRIC_NAMES)
        except (RestoreError, ValueError) as exc:
            log.error("score: %s", exc)
            return EXIT_STAGE
        if args.csv:
            metrics.write_report_csv([rep], args.csv)
        print(",".join(metrics.REPORT_COLUMNS))
        print(",".join(rep.row()))
        return EXIT_OK
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
