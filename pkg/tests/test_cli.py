import inspect
from pathlib import Path

import numpy as np
import pytest

from splitspot import errors
from splitspot.cli import main, map_to_csv, read_map_csv, run_analyze
from splitspot.config import KEYS, dump_defaults, parse_config, parse_text
from splitspot.counting import CountMap
from splitspot.errors import ConfigError, ThinCrystalViolation

README = Path(__file__).resolve().parents[1] / "README.md"

SMALL_SCAN = """\
scan.x_min = 3.4 cm
scan.x_max = 4.1 cm
scan.y_min = -0.9 cm
scan.y_max = 0.9 cm
scan.step = 400 um
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_config_is_defaults_without_selector(tmp_path):
    cfg = parse_config(write(tmp_path, ""))
    assert cfg.experiment is None
    assert cfg["pump.l"] == 4 and cfg["crystal.l_c"] == 0.2
    from splitspot.cli import run

    with pytest.raises(ConfigError, match="experiment"):
        run(cfg)


def test_scan_selector_and_charge(tmp_path):
    cfg = parse_config(write(tmp_path, "pump.l = 4\nexperiment = scan  # l=4 run\n"))
    assert cfg.experiment == "scan"
    scene = cfg.scene()
    assert scene.pump.l == 4 and scene.pump.z_R == 0.5


def test_units_are_converted(tmp_path):
    cfg = parse_text("crystal.l_c = 2 mm\ngate.pulse_width = 0.038 us\npump.wavelength = 0.3511 um\n"
                     "crystal.cut_polar = 0.5 rad\nscan.pair_rate = 3 kHz\n")
    assert cfg["crystal.l_c"] == pytest.approx(0.2)
    assert cfg["gate.pulse_width"] == pytest.approx(38e-9)
    assert cfg["pump.wavelength"] == pytest.approx(351.1e-7)
    assert cfg["crystal.cut_polar"] == 0.5
    assert cfg["scan.pair_rate"] == 3000.0


def test_thin_crystal_violation():
    with pytest.raises(ThinCrystalViolation, match="crystal.l_c"):
        parse_text("crystal.l_c = 2 m\n")


@pytest.mark.parametrize(
    "text,key,line",
    [
        ("seed = 1\nbogus.key = 3\n", "bogus.key", 2),
        ("crystal.l_c = 0.2\n", "crystal.l_c", 1),
        ("\n\ncrystal.l_c = 0.2 kg\n", "crystal.l_c", 3),
        ("pump.l = 4 cm\n", "pump.l", 1),
        ("detector.efficiency = 1.5\n", "detector.efficiency", 1),
        ("scan.step = -3 um\n", "scan.step", 1),
        ("seed = 1\nseed = 2\n", "seed", 2),
        ("experiment = bake\n", "experiment", 1),
        ("pump.l = four\n", "pump.l", 1),
    ],
)
def test_config_errors_carry_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.key == key and info.value.line == line
    assert key in str(info.value) and f"line {line}" in str(info.value)


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["scan", "--config", str(tmp_path / "nope.cfg")]) == ConfigError.exit_code
    assert "cannot read" in capsys.readouterr().err


def test_selector_conflict(tmp_path):
    cfg = write(tmp_path, "experiment = triple\n")
    assert main(["scan", "--config", str(cfg)]) == ConfigError.exit_code


def test_thin_crystal_exit_code(tmp_path):
    cfg = write(tmp_path, "crystal.l_c = 1 cm\n")
    assert main(["scan", "--config", str(cfg)]) == ThinCrystalViolation.exit_code


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = write(tmp_path, SMALL_SCAN)
    code = main(["scan", "--config", str(cfg), "--out", str(blocker / "sub")])
    assert code == errors.OutputError.exit_code


def test_exit_codes_distinct():
    classes = [c for _, c in inspect.getmembers(errors, inspect.isclass) if issubclass(c, errors.SplitSpotError)]
    codes = [c.exit_code for c in classes]
    assert len(codes) == len(set(codes)) >= 17
    assert all(code != 0 for code in codes)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    xs = np.round(np.arange(3.4, 4.1, 0.04), 6)
    ys = np.round(np.arange(-0.9, 0.9001, 0.04), 6)
    X, Y = np.meshgrid(xs, ys)
    lam = 2 + 60 * np.exp(-((X - 3.74) ** 2) / 0.01 - (Y - 0.55) ** 2 / 0.03) + 55 * np.exp(
        -((X - 3.74) ** 2) / 0.01 - (Y + 0.55) ** 2 / 0.03)
    cmap = CountMap(xs, ys, rng.poisson(lam).astype(float))
    p = tmp_path / "m.csv"
    p.write_text(map_to_csv(cmap))
    back = read_map_csv(p)
    assert np.array_equal(back.xs, cmap.xs) and np.array_equal(back.ys, cmap.ys)
    assert np.array_equal(back.values, cmap.values)
    cfg = parse_text(f"output.dir = {tmp_path / 'a'}\n")
    fa, la = run_analyze(cfg, cmap)
    fb, lb = run_analyze(cfg.with_values(**{"output.dir": str(tmp_path / "b")}), back)
    assert fa == fb and la == lb
    assert (tmp_path / "a" / "fit.txt").read_bytes() == (tmp_path / "b" / "fit.txt").read_bytes()


def test_csv_format(tmp_path):
    cmap = CountMap(np.array([0.1, 0.2]), np.array([-1.0, 1.0]), np.array([[1.0, 2.0], [3.0, 1234567.0]]))
    assert map_to_csv(cmap).splitlines() == [
        "x_cm,y_cm,value", "0.1,-1,1", "0.2,-1,2", "0.1,1,3", "0.2,1,1.23457e+06"]


def test_scan_outputs_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL_SCAN)
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "5"]) == 0
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "5", "--workers", "3"]) == 0
    for name in ("coincidence_map.csv", "singles_map.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "6"]) == 0
    assert (tmp_path / "a" / "coincidence_map.csv").read_bytes() != (tmp_path / "c" / "coincidence_map.csv").read_bytes()
    assert not list((tmp_path / "a").glob("*.tmp"))


def read_report(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def test_l0_scan_then_analyze(tmp_path):
    cfg = write(tmp_path, SMALL_SCAN + "pump.l = 0\n")
    out = tmp_path / "l0"
    assert main(["scan", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 0
    fit = read_report(out / "fit.txt")
    assert float(fit["delta_y0_cm"]) < float(fit["grid_step_cm"])
    assert fit["rounded_l"] == "0"


def test_analyze_missing_map(tmp_path):
    assert main(["analyze", "--out", str(tmp_path / "empty")]) == ConfigError.exit_code


@pytest.mark.slow
def test_full_pipeline_l4(tmp_path):
    cfg = write(tmp_path, "triple.model = semiclassical\n")
    out = tmp_path / "full"
    assert main(["full", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
    fit = read_report(out / "fit.txt")
    assert fit["rounded_l"] == "4"
    rates = read_report(out / "rates.txt")
    assert float(rates["R_triple_semiclassical"]) == pytest.approx(0.0196, abs=5e-4)
    assert set(rates) >= {"R_trig", "R_ctop", "R_cbot", "R_top", "R_bot", "R_triple_measured", "R_acc",
                          "R_triple_true", "R_triple_semiclassical", "ratio_semiclassical_to_true"}


def test_defaults_dump_round_trips(capsys):
    assert main(["defaults"]) == 0
    text = capsys.readouterr().out
    assert text == dump_defaults()
    cfg = parse_text(text)
    for key in KEYS:
        if key.default is None:
            assert cfg[key.name] is None
        elif isinstance(key.default, float):
            assert cfg[key.name] == pytest.approx(key.default, rel=1e-5)
        else:
            assert cfg[key.name] == key.default


def test_readme_defaults_table_is_current():
    text = README.read_text()
    start = text.index("<!-- defaults:begin -->")
    end = text.index("<!-- defaults:end -->")
    block = text[start:end].split("```")[1]
    assert block.lstrip("\n").removeprefix("text\n") == dump_defaults()
