import json


from skewlab.cli import EXIT_USAGE, main
from skewlab.outputs import read_pgm


def run(*args):
    return main(list(args))


def test_find_params_writes_certificate(tmp_path):
    assert run("find-params", "--out", str(tmp_path)) == 0
    doc = json.loads((tmp_path / "params.json").read_text())
    c = complex(*map(float, doc["params"]["c"]))
    assert abs(c - 3**0.5) < 1e-10
    again = tmp_path / "again"
    assert run("find-params", "--out", str(again)) == 0
    assert (again / "params.json").read_bytes() == (tmp_path / "params.json").read_bytes()


def test_degree_two_is_a_usage_error(capsys):
    assert run("find-params", "--d", "2") == EXIT_USAGE
    assert "d >= 3" in capsys.readouterr().err


def test_unknown_probe_is_a_usage_error():
    assert run("probe", "nonsense") == EXIT_USAGE


def test_uncertified_parameter_refused(tmp_path):
    assert run("probe", "ramification", "--c", "1.7", "--out", str(tmp_path)) == EXIT_USAGE


def test_unchecked_parameter_allowed(tmp_path):
    code = run("probe", "ramification", "--c", "1.7", "--nmax", "2", "--unchecked", "--out", str(tmp_path))
    assert code in (0, 2, 3)
    assert (tmp_path / "probe-ramification.json").exists()


def test_render_slice(tmp_path):
    assert run("render-slice", "--grid", "96x96", "--nmax", "512", "--out", str(tmp_path)) == 0
    img, meta = read_pgm(tmp_path / "slice.pgm")
    assert img.shape == (96, 96) and set(img.ravel()) <= {0, 128, 255}
    assert meta["delta_hat_z"] > 3
    side = json.loads((tmp_path / "potential.f32.json").read_text())
    assert side["shape"] == [96, 96]


def test_probe_exit_code_reflects_verdict(tmp_path):
    assert run("probe", "intersections", "--circles", "1", "--out", str(tmp_path)) == 0
    cert = json.loads((tmp_path / "probe-intersections.json").read_text())
    assert cert["verdict"] == "pass" and cert["kind"] == "intersections"


def test_linearize_command(tmp_path):
    assert run("linearize", "--out", str(tmp_path)) == 0
    doc = json.loads((tmp_path / "siegel.json").read_text())
    assert doc["conjugacy_residual_half_radius"] < 1e-8
