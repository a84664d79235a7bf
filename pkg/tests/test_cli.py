import logging
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restore import cli
from restore.imagecore import load_image, save_image
from restore.metrics import read_report_csv


@pytest.fixture
def image_file(tmp_path):
    rng = np.random.default_rng(3)
    path = tmp_path / "in.pgm"
    save_image(rng.integers(20, 230, (32, 32)).astype(float), path)
    return path


def write_cfg(tmp_path, text, name="p.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def problems_of(text):
    with pytest.raises(cli.ConfigError) as exc:
        cli.parse_config_text(text)
    return exc.value.problems


# --- parsing -----------------------------------------------------------------------

def test_parse_minimal():
    cfg = cli.parse_config_text("input = a.pgm\nstage.0.name = degrade  # trailing comment\n")
    assert cfg.input == "a.pgm" and cfg.outdir == "out" and cfg.seed == 0
    assert [s.name for s in cfg.stages] == ["degrade"]


def test_stages_ordered_by_index():
    cfg = cli.parse_config_text(
        "input = a\nstage.5.name = window_deblur\nstage.1.name = smooth_shrink\nstage.1.levels = 2\n")
    assert [s.name for s in cfg.stages] == ["smooth_shrink", "window_deblur"]
    assert cfg.stages[0].params == {"levels": 2}


def test_empty_file_no_stages():
    assert any("no stages" in p for p in problems_of(""))


def test_window_sigma_must_be_odd():
    probs = problems_of("input = a\nstage.0.name = window_deblur\nstage.0.sigma = 4\n")
    assert len(probs) == 1
    assert "must be odd" in probs[0]
    assert "stage 0" in probs[0] and "sigma" in probs[0] and "line 3" in probs[0]


def test_every_problem_reported():
    probs = problems_of(
        "input = a\n"
        "colour = red\n"
        "stage.0.name = degrade\n"
        "stage.0.looks = many\n"
        "stage.0.name = cls\n"
        "stage.1.name = window_deblur\n"
        "stage.1.bogus = 1\n"
        "this line is junk\n")
    text = "\n".join(probs)
    assert "unknown key 'colour'" in text
    assert "stage 0 (degrade): looks" in text
    assert "duplicate stage index" in text
    assert "stage 1 (window_deblur): bogus: unknown parameter" in text
    assert "line 8" in text
    assert len(probs) == 5


def test_missing_input_key():
    assert "missing key 'input'" in problems_of("stage.0.name = degrade\n")


def test_unknown_stage():
    assert any("unknown stage 'sharpen'" in p for p in problems_of("input = a\nstage.0.name = sharpen\n"))


def test_region_and_metrics():
    cfg = cli.parse_config_text("input = a\nmetrics = isnr, enl\nenl_region = 0:8,2:10\nstage.0.name = cls\n")
    assert cfg.metrics == ("isnr", "enl")
    assert cfg.enl_region == (0, 8, 2, 10)
    assert problems_of("input = a\nmetrics = sharpness\nstage.0.name = cls\n")


def test_reg_param_auto():
    cfg = cli.parse_config_text("input = a\nstage.0.name = cls\nstage.0.reg_param = auto\n")
    assert cfg.stages[0].params["reg_param"] == "auto"
    assert problems_of("input = a\nstage.0.name = cls\nstage.0.reg_param = -1\n")


_stage_strategies = {
    "degrade": st.fixed_dictionaries({}, optional={
        "blur_variance": st.floats(0, 10), "noise": st.sampled_from(cli.NOISE_CHOICES),
        "looks": st.integers(1, 64), "sigma_n": st.floats(0, 50)}),
    "smooth_shrink": st.fixed_dictionaries({}, optional={
        "family": st.sampled_from(["haar", "db4"]), "levels": st.integers(1, 4),
        "kernel_size": st.sampled_from([3, 5, 7])}),
    "window_deblur": st.fixed_dictionaries({}, optional={
        "sigma": st.sampled_from([3, 5, 9]), "alfa": st.floats(-2, 2)}),
    "cls": st.fixed_dictionaries({}, optional={
        "reg_param": st.one_of(st.just("auto"), st.floats(0, 1)),
        "blur_variance": st.floats(0.1, 5)}),
    "som_train": st.fixed_dictionaries({}, optional={
        "n_neurons": st.integers(2, 512), "alpha0": st.floats(0, 1),
        "scan": st.sampled_from(["ordered", "random"])}),
}

_configs = st.builds(
    cli.PipelineConfig,
    input=st.from_regex(r"[A-Za-z0-9_./:-]{1,20}", fullmatch=True),
    outdir=st.from_regex(r"[A-Za-z0-9_./-]{1,20}", fullmatch=True),
    stages=st.lists(
        st.sampled_from(sorted(_stage_strategies)).flatmap(
            lambda name: _stage_strategies[name].map(lambda p: cli.StageSpec(name, p))),
        min_size=1, max_size=5),
    metrics=st.lists(st.sampled_from(cli.METRIC_NAMES), min_size=1, unique=True).map(tuple),
    seed=st.integers(0, 2 ** 32),
    enl_region=st.one_of(st.none(), st.tuples(st.integers(0, 9), st.integers(10, 20),
                                              st.integers(0, 9), st.integers(10, 20))),
)


@settings(max_examples=100, deadline=None)
@given(_configs)
def test_serialize_round_trip(cfg):
    assert cli.parse_config_text(cli.serialize_config(cfg)) == cfg


# --- run -----------------------------------------------------------------------------

def test_single_degrade_stage_outputs(tmp_path, image_file):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, f"input = {image_file}\noutdir = {out}\n"
                              "stage.0.name = degrade\nstage.0.noise = speckle_multilook\nstage.0.looks = 4\n")
    assert cli.main(["run", str(cfg), "--quiet"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["0_degrade.pgm", "metrics.csv"]
    assert load_image(out / "0_degrade.pgm").shape == (32, 32)


def test_missing_input_file(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, f"input = {tmp_path / 'nope.pgm'}\noutdir = {out}\nstage.0.name = degrade\n")
    assert cli.main(["run", str(cfg), "--quiet"]) == cli.EXIT_CONFIG
    assert not out.exists()


def test_config_error_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, "")
    assert cli.main(["run", str(cfg), "--quiet"]) == 2
    assert cli.main(["run", str(tmp_path / "absent.cfg"), "--quiet"]) == 2


def test_stage_failure_keeps_partial_outputs(tmp_path, image_file, caplog):
    out = tmp_path / "out"
    # cls with no blur anywhere cannot run
    cfg = write_cfg(tmp_path, f"input = {image_file}\noutdir = {out}\n"
                              "stage.0.name = window_deblur\nstage.1.name = cls\n")
    with caplog.at_level(logging.ERROR):
        assert cli.main(["run", str(cfg)]) == 3
    assert "stage 1 (cls)" in caplog.text
    assert sorted(p.name for p in out.iterdir()) == ["0_window_deblur.pgm", "metrics.csv"]
    assert [r.pipeline for r in read_report_csv(out / "metrics.csv")] == ["0_window_deblur"]


def test_window_too_wide_is_stage_error(tmp_path, image_file):
    cfg = write_cfg(tmp_path, f"input = {image_file}\noutdir = {tmp_path / 'o'}\n"
                              "stage.0.name = window_deblur\nstage.0.sigma = 33\n")
    assert cli.main(["run", str(cfg), "--quiet"]) == 3


def test_phantom_input_and_som_artifact(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, f"input = phantom:ramp:24\noutdir = {out}\n"
                              "stage.0.name = som_train\nstage.0.n_neurons = 8\n")
    assert cli.main(["run", str(cfg), "--quiet"]) == 0
    assert (out / "0_som_train.sommap").exists()


def test_unknown_phantom(tmp_path):
    cfg = write_cfg(tmp_path, f"input = phantom:cat\noutdir = {tmp_path / 'o'}\nstage.0.name = degrade\n")
    assert cli.main(["run", str(cfg), "--quiet"]) == 2


_NOISY = ("stage.0.name = degrade\nstage.0.noise = speckle_amplitude_single_look\n")


def _run_bytes(tmp_path, argv, seed_env=None, monkeypatch=None, sub="o"):
    out = tmp_path / sub
    if monkeypatch is not None:
        if seed_env is None:
            monkeypatch.delenv("RESTORE_SEED", raising=False)
        else:
            monkeypatch.setenv("RESTORE_SEED", seed_env)
    assert cli.main(argv + ["--outdir", str(out), "--quiet"]) == 0
    return (out / "0_degrade.pgm").read_bytes()


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = str(write_cfg(tmp_path, "input = phantom:ramp:16\nseed = 1\n" + _NOISY))
    base = _run_bytes(tmp_path, ["run", cfg], None, monkeypatch, "a")
    env = _run_bytes(tmp_path, ["run", cfg], "2", monkeypatch, "b")
    assert env != base
    # the flag beats the environment
    flag = _run_bytes(tmp_path, ["run", cfg, "--seed", "1"], "2", monkeypatch, "c")
    assert flag == base
    cfg2 = str(write_cfg(tmp_path, "input = phantom:ramp:16\nseed = 2\n" + _NOISY, "q.cfg"))
    assert _run_bytes(tmp_path, ["run", cfg2], None, monkeypatch, "d") == env


def test_bad_restore_seed(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, "input = phantom:ramp:16\n" + _NOISY)
    monkeypatch.setenv("RESTORE_SEED", "abc")
    assert cli.main(["run", str(cfg), "--quiet"]) == 2


def test_flag_override_warns(tmp_path, caplog, monkeypatch):
    monkeypatch.delenv("RESTORE_SEED", raising=False)
    cfg = write_cfg(tmp_path, f"input = phantom:ramp:16\noutdir = {tmp_path / 'x'}\n" + _NOISY)
    with caplog.at_level(logging.WARNING):
        assert cli.main(["run", str(cfg), "--outdir", str(tmp_path / "y")]) == 0
    assert "--outdir overrides" in caplog.text
    assert (tmp_path / "y" / "0_degrade.pgm").exists() and not (tmp_path / "x").exists()


def test_quiet_still_writes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, f"input = phantom:ramp:16\noutdir = {tmp_path / 'o'}\n" + _NOISY)
    assert cli.main(["run", str(cfg), "--quiet"]) == 0
    assert (tmp_path / "o" / "0_degrade.pgm").exists()


def test_stage_seeds_differ():
    assert cli.stage_seed(0, 0) != cli.stage_seed(0, 1)
    assert cli.stage_seed(5, 2) == cli.stage_seed(5, 2)


# --- shortcuts ---------------------------------------------------------------------------

def test_shortcut_chain(tmp_path, image_file, capsys):
    d, s, w, c = (str(tmp_path / n) for n in ("d.pgm", "s.pgm", "w.pgm", "c.png"))
    assert cli.main(["degrade", "--input", str(image_file), "--output", d, "--blur-variance", "1.5",
                     "--noise", "additive_gaussian", "--bsnr-db", "20", "--seed", "3", "--quiet"]) == 0
    assert cli.main(["denoise", "--input", d, "--output", s, "--quiet"]) == 0
    assert cli.main(["denoise", "--input", d, "--output", s, "--method", "soft_laplacian", "--quiet"]) == 0
    assert cli.main(["deblur", "--input", s, "--output", w, "--quiet"]) == 0
    assert cli.main(["deblur", "--input", d, "--output", c, "--method", "cls", "--quiet"]) == 0
    assert load_image(c).shape == (32, 32)
    capsys.readouterr()
    csv = tmp_path / "m.csv"
    assert cli.main(["score", "--original", str(image_file), "--degraded", d, "--restored", c,
                     "--csv", str(csv), "--quiet"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "pipeline,isnr_db,bsnr_db,mse,psnr_db,enl"
    assert lines[1].startswith("restored,")
    assert read_report_csv(csv)[0].isnr_db is not None


def test_shortcut_som_map_out(tmp_path, image_file):
    m = tmp_path / "m.sommap"
    assert cli.main(["deblur", "--input", str(image_file), "--output", str(tmp_path / "o.pgm"),
                     "--method", "som", "--n-neurons", "8", "--total-steps", "200",
                     "--map-out", str(m), "--quiet"]) == 0
    assert m.read_text().startswith("SOMMAP 8 9")


def test_shortcut_validation(tmp_path, image_file):
    out = tmp_path / "o.pgm"
    assert cli.main(["deblur", "--input", str(image_file), "--output", str(out),
                     "--sigma", "4", "--quiet"]) == 2
    assert cli.main(["degrade", "--input", str(tmp_path / "none.pgm"), "--output", str(out), "--quiet"]) == 2
    assert cli.main(["degrade", "--input", str(image_file), "--output", str(out),
                     "--noise", "additive_gaussian", "--quiet"]) == 3
    assert not out.exists()


def test_shortcut_degrade_deterministic(tmp_path, image_file):
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    for p in (a, b):
        cli.main(["degrade", "--input", str(image_file), "--output", str(p),
                  "--noise", "speckle_multilook", "--looks", "4", "--seed", "9", "--quiet"])
    assert a.read_bytes() == b.read_bytes()


def test_console_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, f"input = phantom:ramp:16\noutdir = {tmp_path / 'o'}\n" + _NOISY)
    res = subprocess.run([sys.executable, "-m", "restore", "run", str(cfg), "--quiet"],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "restore", "run", str(tmp_path / "missing.cfg")],
                         capture_output=True, text=True)
    assert res.returncode == 2
    assert "cannot read config" in res.stderr
