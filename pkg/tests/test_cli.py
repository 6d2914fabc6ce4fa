import json

import pytest

from polybubble import cli
from polybubble.errors import ConfigError

BASE = """\
N = 7
m = 1
k = 1
beta = 6
lattice.selection = full-box
lattice.radius = 3
L_scan = 8, 16, 32
"""


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_defaults():
    rc = cli.parse_config(BASE)
    assert rc.problem.N == 7 and rc.problem.beta == 6.0
    assert sum(rc.problem.a) == pytest.approx(-1.0)
    assert rc.L_scan == (8.0, 16.0, 32.0)
    assert rc.tolerances["roundtrip"] == 1e-7
    assert rc.verify_pairs == ((1, 5), (2, 7), (3, 9), (2, 10))


def test_parse_explicit_points_and_header():
    rc = cli.parse_config("[run]\nN = 9\nm = 1\nk = 2\nbeta = 8\nlattice.selection = explicit-list\n"
                          "lattice.points = 0,0; 1,0; 0,1\n")
    assert rc.lattice().n == 3


@pytest.mark.parametrize("text,match", [
    ("N = 4\nm = 2\n", "N > 2m"),
    ("N = 7\nm = 1\nbeta = 7.5\n", r"\(A3\)"),
    ("N = 7\nm = 1\na = 1, 1, 1, 1, 1, 1, -70\n", r"\(A1\)"),
    ("N = 7\nm = 1\nk = 3\n", "k"),
    ("N = 7\nm = 1\nbogus = 1\n", "unknown config keys"),
    ("N = 7\nm = 1\ntol.nothing = 1\n", "unknown tolerance"),
    ("N = 7\nm = 1\nverify.pairs = 2:4\n", "N > 2m"),
    ("N = 7\nm = 1\nbeta = abc\n", "bad value"),
    ("N = 7\nm = 1\nN = 9\n", "malformed"),
])
def test_config_rejections(text, match):
    with pytest.raises(ConfigError, match=match):
        cli.parse_config(text)


def test_verify_kernel_exit_zero(tmp_path):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["verify-kernel", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads((out / "verify-kernel.json").read_text())
    assert data["ok"] is True
    assert [[e["m"], e["N"]] for e in data["entries"]] == [[1, 5], [2, 7], [3, 9], [2, 10]]
    assert all(e["pde_residual_zero"] for e in data["entries"])
    assert data["schema_version"] == cli.SCHEMA_VERSION


def test_verify_kernel_negative_control(tmp_path, capsys):
    cfg = _write(tmp_path, BASE + "verify.perturb = 1/1000\n")
    out = tmp_path / "out"
    assert cli.main(["verify-kernel", "--config", cfg, "--out", str(out)]) == 1
    data = json.loads((out / "verify-kernel.json").read_text())
    assert not data["ok"]
    assert all("-1/1000" in e["pde_residual"] for e in data["entries"])


def test_invalid_config_exit_two(tmp_path, capsys):
    cfg = _write(tmp_path, "N = 4\nm = 2\n")
    assert cli.main(["verify-kernel", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "N > 2m" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_constants_and_solve(tmp_path):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["constants", "--config", cfg, "--out", str(out)]) == 0
    c = json.loads((out / "constants.json").read_text())["constants"]
    assert c["cprime_m"] == "1" and c["B"] > 0
    assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0
    s = json.loads((out / "solve.json").read_text())
    assert s["residual"] < 1e-12 and s["uniqueness_spread"] < 1e-10 and s["sigma_min"] > 0
    rows = (out / "solve.csv").read_text().splitlines()
    assert rows[0] == "index,point,a,mu,offset_norm,x1,P1"
    assert len(rows) == 1 + 7


def test_scan_flags_slope(tmp_path):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["scan-L", "--config", cfg, "--out", str(out)]) == 0
    s = json.loads((out / "scan-L.json").read_text())
    assert s["slope"] == pytest.approx(5.0, rel=0.01)
    assert s["slope_deviation_flag"] is False
    assert s["mirror_height_asymmetry"] < 1e-10


def test_commands_from_config(tmp_path):
    cfg = _write(tmp_path, BASE + "commands = verify-kernel, constants\n")
    out = tmp_path / "out"
    assert cli.main(["--config", cfg, "--out", str(out)]) == 0
    assert (out / "verify-kernel.json").exists() and (out / "constants.json").exists()


SMALL = BASE.replace("L_scan = 8, 16, 32", "L_scan = 8, 16") + """\
pohozaev.m = 1, 2
pohozaev.pairs = 1
pohozaev.degree = 16
pohozaev.radial_nodes = 12
tol.roundtrip = 1e-6
norm.radial = 12
norm.sphere_degree = 2
appendix.samples = 20
"""


@pytest.mark.parametrize("command", list(cli.COMMANDS))
def test_byte_identical_reruns(tmp_path, command):
    cfg = _write(tmp_path, SMALL)
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        cli.main([command, "--config", cfg, "--out", str(out), "--seed", "11"])
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] and outs[0] == outs[1]


def test_seed_changes_randomized_output(tmp_path):
    cfg = _write(tmp_path, SMALL)
    blobs = []
    for seed in ("1", "2"):
        out = tmp_path / f"o{seed}"
        cli.main(["pohozaev-check", "--config", cfg, "--out", str(out), "--seed", seed])
        blobs.append((out / "pohozaev-check.csv").read_bytes())
    assert blobs[0] != blobs[1]
