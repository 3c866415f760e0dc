import numpy as np
import pytest

from gaininit.cli import main
from gaininit.config import SyntheticConfig, config_lines, load_config, parse_config
from gaininit.data import ShotGather, SurveyDataset
from gaininit.errors import ConfigError, FormatError
from gaininit.geometry import AcquisitionGeometry
from gaininit.pipeline import PipelineConfig
from gaininit.trace_io import read_grid, read_survey, write_survey

SMALL = """
[pipeline]
background_velocity = 3000
damping_constants = 2, 6, 12
gain_powers = 0, 2
shot_decimation = 2
gradient_grid = 200
output_grid = 100
grid_depth = 1000

[synthetic]
shot_count = 4
shot_spacing = 300
receiver_count = 8
offset_min = 150
offset_max = 1450
source_depth = 300
receiver_depth = 300
wavelet_width = 0.004
scatterers = 900:600:150
"""


@pytest.fixture
def small(tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL)
    srv = tmp_path / "small.srv"
    assert main(["synth", "--config", str(cfg), "--out", str(srv)]) == 0
    return cfg, srv


def test_parse_config_values():
    pipe, syn = parse_config(SMALL)
    assert pipe.damping_constants == (2.0, 6.0, 12.0) and pipe.gain_powers == (0, 2)
    assert syn.scatterers == ((900.0, 600.0, 150.0),)
    assert syn.geometry().n_shots == 4
    pipe2, syn2 = parse_config("[transform]\ngain_powers = 1\nsource_amplitude = estimate\n")
    assert pipe2.gain_powers == (1,) and pipe2.source_amplitude is None and syn2 is None


@pytest.mark.parametrize("text", ["[pipeline]\nbogus = 1\n", "[other]\nx = 1\n", "[pipeline]\ngain_powers = 1.5\n",
                                  "[pipeline]\ndamping_constants =\n", "not a config"])
def test_bad_config_text(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(FormatError):
        load_config(tmp_path / "none.cfg")
    assert load_config(None) == (PipelineConfig(), None)


def test_config_lines_echo_every_field():
    lines = config_lines(PipelineConfig())
    assert "config.gain_powers: 0, 1, 2, 3, 4" in lines
    assert "config.damping_constants: 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12" in lines
    assert len(lines) == len(PipelineConfig().as_dict())


def test_synthetic_config_validation():
    with pytest.raises(ConfigError):
        SyntheticConfig(layout="ring")


def test_synth_writes_readable_survey(small):
    _, srv = small
    ds = read_survey(srv)
    assert ds.geometry.n_shots == 4 and ds.nt == 12001


def test_synth_needs_synthetic_section(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("[pipeline]\nshot_decimation = 1\n")
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "x.srv")]) == 2


def test_synth_unwritable_path(tmp_path, small):
    cfg, _ = small
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "no" / "dir" / "x.srv")]) == 3


def test_check_passes_and_prints_table(small, capsys):
    cfg, srv = small
    assert main(["check", str(srv), "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "record_length: 12" in out and "FAIL" not in out


def test_check_flags_high_gain(small, tmp_path, capsys):
    _, srv = small
    cfg = tmp_path / "hi.cfg"
    cfg.write_text("[pipeline]\ngain_powers = 0, 8\ndamping_constants = 2\n")
    assert main(["check", str(srv), "--config", str(cfg)]) == 4
    assert "  8      2" in capsys.readouterr().out.replace("FAIL", "")


def test_check_rejects_empty_damping(small, tmp_path):
    _, srv = small
    cfg = tmp_path / "e.cfg"
    cfg.write_text("[pipeline]\ndamping_constants =\n")
    assert main(["check", str(srv), "--config", str(cfg)]) == 2


def test_transform_stability_and_force(small, tmp_path, capsys):
    _, srv = small
    cfg = tmp_path / "hi.cfg"
    cfg.write_text("[pipeline]\ngain_powers = 8\ndamping_constants = 2\n")
    out = tmp_path / "lap.csv"
    assert main(["transform", str(srv), "--config", str(cfg), "--out", str(out)]) == 4
    assert not out.exists()
    assert main(["transform", str(srv), "--config", str(cfg), "--out", str(out), "--force"]) == 0
    assert "warning" in capsys.readouterr().err
    lines = out.read_text().splitlines()
    assert lines[0] == "shot,receiver,s,n,value" and len(lines) == 1 + 4 * 8


def test_build_and_export(small, tmp_path):
    cfg, srv = small
    out = tmp_path / "build"
    assert main(["build", str(srv), "--config", str(cfg), "--out", str(out)]) == 0
    manifest = (out / "manifest.txt").read_text()
    assert "config.background_velocity: 3000" in manifest and "shots_used: 2" in manifest
    for name in ("model.grd", "model.csv", "coarse_model.grd", "direction_final.pgm", "direction_s6_n2.csv"):
        assert (out / name).exists()
    model = read_grid(out / "model.grd")
    assert model.dx == 100.0
    assert main(["export", str(out / "model.grd"), "--format", "pgm", "--out", str(tmp_path / "m.pgm")]) == 0
    assert (tmp_path / "m.pgm").read_bytes().startswith(b"P5\n")


def test_build_names_dead_shot(tmp_path, capsys):
    geo = AcquisitionGeometry.streamer([0.0, 400.0], [300.0, 600.0], 300.0, 300.0)
    rng = np.random.default_rng(0)
    live = np.abs(rng.normal(size=(2, 12001)))  # positive, so every n = 0 value is admissible
    gathers = [ShotGather(0, 1e-3, live), ShotGather(1, 1e-3, np.zeros((2, 12001)))]
    srv = tmp_path / "dead.srv"
    write_survey(SurveyDataset(geo, gathers), srv)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("[pipeline]\nshot_decimation = 1\ngain_powers = 0\ndamping_constants = 4\ngrid_depth = 600\n")
    assert main(["build", str(srv), "--config", str(cfg), "--out", str(tmp_path / "o")]) == 5
    assert "shot 1" in capsys.readouterr().err


def test_missing_survey_is_io_error(tmp_path):
    assert main(["check", str(tmp_path / "missing.srv")]) == 3


def test_inline_comments_allowed():
    pipe, syn = parse_config("[pipeline]\nwater_depth = 300 ; flat\n[synthetic]\nlayout = fixed # spread\n")
    assert pipe.water_depth == (300.0,) and syn.layout == "fixed"
