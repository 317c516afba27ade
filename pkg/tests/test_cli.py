import configparser
import hashlib
import subprocess
import sys

import numpy as np
import pytest

from transdecomp import cli


@pytest.fixture
def ini(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[potential]\na = 2\nb = 3\nv0 = 5\n")
    return path


def run(ini, out, command, *extra):
    return cli.main([command, "--config", str(ini), "--out", str(out), *extra])


def read_csv(path):
    header = path.read_text().splitlines()[0].split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def read_manifest(out, command):
    mf = configparser.ConfigParser(interpolation=None)
    mf.optionxform = str
    mf.read(out / f"manifest_{command}.txt")
    return mf


def verify_checksums(out, command):
    mf = read_manifest(out, command)
    assert mf["files"]
    for name, digest in mf["files"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    return mf


class TestPoles:
    def test_default_three_poles(self, ini, tmp_path):
        out = tmp_path / "o"
        assert run(ini, out, "poles") == 0
        header, data = read_csv(out / "poles.csv")
        assert header == ["index", "re_mu", "im_mu", "e_res", "gamma", "residual", "iterations"]
        ref = [(0.9106, -0.0011), (3.5117, -0.0282), (7.1168, -0.4462)]
        assert data.shape[0] == 3
        np.testing.assert_allclose(data[:, 1:3], ref, atol=1e-3)
        np.testing.assert_array_equal(data[:, 0], [1, 2, 3])
        assert np.all(np.diff(data[:, 3]) > 0)
        mf = verify_checksums(out, "poles")
        assert mf["run"]["status"] == "ok"
        assert "pole.3" in mf["poles"]
        assert mf["config"]["potential.v0"] == "5.0"

    def test_rerun_byte_identical(self, ini, tmp_path):
        run(ini, tmp_path / "a", "poles")
        run(ini, tmp_path / "b", "poles")
        assert (tmp_path / "a" / "poles.csv").read_bytes() == (tmp_path / "b" / "poles.csv").read_bytes()

    def test_free_case_header_only(self, ini, tmp_path):
        out = tmp_path / "o"
        assert run(ini, out, "poles", "--set", "potential.v0=0") == 0
        assert (out / "poles.csv").read_text().strip() == "index,re_mu,im_mu,e_res,gamma,residual,iterations"
        mf = verify_checksums(out, "poles")
        assert any("no resonance poles" in w for w in mf["warnings"].values())

    def test_precision(self, ini, tmp_path):
        out = tmp_path / "o"
        run(ini, out, "poles", "--set", "output.precision=6")
        row = (out / "poles.csv").read_text().splitlines()[1].split(",")
        assert row[1] == "9.10624e-01"


class TestDensities:
    def test_smatrix_unitary(self, ini, tmp_path):
        out = tmp_path / "o"
        assert run(ini, out, "smatrix") == 0
        header, data = read_csv(out / "smatrix.csv")
        assert header == ["E", "re_S", "im_S", "phase"]
        assert data.shape == (2000, 4)
        # 12 significant digits bound the achievable agreement
        assert np.max(np.abs(np.hypot(data[:, 1], data[:, 2]) - 1)) < 1e-11
        assert np.max(np.abs(np.diff(data[:, 3]))) < np.pi
        verify_checksums(out, "smatrix")

    def test_energy_density_peak(self, ini, tmp_path):
        out = tmp_path / "o"
        assert run(ini, out, "energy-density") == 0
        _, data = read_csv(out / "energy_density.csv")
        E = data[:, 0]
        assert np.argmax(data[:, 1]) == np.argmin(np.abs(E - 7.1168))

    def test_spatial_density(self, ini, tmp_path):
        out = tmp_path / "o"
        assert run(ini, out, "spatial-density") == 0
        header, data = read_csv(out / "spatial_density.csv")
        assert header == ["x", "abs2_psi_app"]
        assert data.shape == (800, 2)
        assert np.all(data[:, 1] >= 0)
        assert data[0, 1] < 1e-20

    def test_explicit_mu(self, ini, tmp_path):
        out = tmp_path / "o"
        assert run(ini, out, "energy-density", "--set", "state.mu=3.5-0.03i") == 0
        _, data = read_csv(out / "energy_density.csv")
        assert abs(data[np.argmax(data[:, 1]), 0] - 3.5) < 0.02

    def test_pole_index_out_of_range(self, ini, tmp_path, capsys):
        out = tmp_path / "o"
        assert run(ini, out, "energy-density", "--set", "state.pole=4") == 2
        err = capsys.readouterr().err
        assert "state.pole=4" in err and "3: 7.11679" in err
        assert read_manifest(out, "energy-density")["run"]["status"] == "config-error"


class TestEvolution:
    def test_mexp(self, ini, tmp_path):
        out = tmp_path / "o"
        assert run(ini, out, "mexp") == 0
        header, data = read_csv(out / "mexp.csv")
        assert header == ["t", "m_expectation"]
        t, m = data.T
        assert len(t) == 400
        assert np.max(np.diff(m)) < 1e-6
        G = 0.8924
        sel = (t >= 0.5 / G) & (t <= 2 / G)
        assert np.polyfit(t[sel], np.log(m[sel]), 1)[0] == pytest.approx(-G, rel=0.1)
        mf = verify_checksums(out, "mexp")
        assert float(mf["summary"]["decay_rate"]) == pytest.approx(-G, rel=0.1)

    def test_decompose_with_cache(self, ini, tmp_path):
        out, cache = tmp_path / "o", tmp_path / "cache"
        args = ("--set", "energy_grid.n=400", "--set", "x_grid.n=200", "--cache", str(cache))
        assert run(ini, out, "decompose", *args) == 0
        first = (out / "density.csv").read_bytes()
        assert len(list(cache.iterdir())) == 1
        assert run(ini, out, "decompose", *args) == 0
        assert (out / "density.csv").read_bytes() == first
        header, data = read_csv(out / "density.csv")
        assert header == ["t", "x", "rho_total", "rho_b", "rho_tr", "rho_f"]
        assert data.shape == (6 * 200, 6)
        # rows grouped by snapshot time
        assert np.all(np.diff(data[:, 0]) >= 0)
        assert len(np.unique(data[:, 0])) == 6
        scale = data[:, 2].max()
        assert np.max(np.abs(data[:, 2] - data[:, 3:].sum(axis=1))) < 1e-10 * scale
        mf = verify_checksums(out, "decompose")
        assert mf["clamp_report"]["below"] == "0"


class TestErrors:
    def test_config_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[output]\nprecision = 40\n")
        assert cli.main(["poles", "--config", str(bad), "--out", str(tmp_path)]) == 2
        assert f"{bad}:2" in capsys.readouterr().err

    def test_numerical_failure_exit(self, ini, tmp_path, monkeypatch):
        def boom(run):
            run.emit("partial.csv", ["a"], [[1.0]])
            raise np.linalg.LinAlgError("eigensolver did not converge")

        monkeypatch.setitem(cli.HANDLERS, "poles", boom)
        out = tmp_path / "o"
        assert run(ini, out, "poles") == 3
        mf = verify_checksums(out, "poles")
        assert mf["run"]["status"] == "numerical-failure"
        assert "did not converge" in mf["run"]["error"]

    def test_unknown_command(self, ini):
        with pytest.raises(SystemExit):
            cli.main(["plot", "--config", str(ini)])

    def test_module_entry_point(self, ini, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "transdecomp", "poles", "--config", str(ini), "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "poles.csv" in proc.stdout
