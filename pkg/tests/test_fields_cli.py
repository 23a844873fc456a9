import json

import numpy as np
import pytest

from vibtomo import cli, fileio, montecarlo as mc, states, wigner
from vibtomo.dynamics import DriveConfig
from vibtomo.errors import ConfigError, GridMismatchError
from vibtomo.wigner import PhaseSpaceGrid, WignerMatrixField


def make_field(rng, grid=None, with_stderr=True):
    grid = grid or PhaseSpaceGrid(-1.0, 1.0, 4, -0.5, 0.5, 3)
    n = grid.n_points
    w = np.zeros((n, 2, 2), dtype=complex)
    w[:, 0, 0] = rng.normal(size=n)
    w[:, 1, 1] = rng.normal(size=n)
    w[:, 0, 1] = rng.normal(size=n) + 1j * rng.normal(size=n)
    w[:, 1, 0] = np.conj(w[:, 0, 1])
    stderr = np.abs(rng.normal(size=(n, 2, 2))) if with_stderr else None
    leakage = np.abs(rng.normal(size=n)) * 1e-4 if with_stderr else None
    return WignerMatrixField(grid=grid, w=w, stderr=stderr, leakage=leakage)


class TestFloatEncoding:
    @pytest.mark.parametrize("value", [
        0.0, -0.0, 0.1, -1.0 / 3.0, 2.0 / np.pi, 1e-300, -3.5, 123456789.123456789,
    ])
    def test_bit_exact_round_trip(self, value):
        parsed = float(fileio.format_float(value))
        assert np.array(parsed).tobytes() == np.array(value).tobytes()

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            fileio.format_float(float("nan"))


class TestFieldRoundTrip:
    def test_json_bitwise(self, rng, tmp_path):
        field = make_field(rng)
        path = tmp_path / "f.json"
        fileio.write_field_json(path, field, "sampled", {"seed": 7})
        loaded, kind, meta = fileio.read_field_json(path)
        assert kind == "sampled"
        assert meta == {"seed": 7}
        assert loaded.grid == field.grid
        assert np.array_equal(loaded.w, field.w)
        assert np.array_equal(loaded.stderr, field.stderr)
        assert np.array_equal(loaded.leakage, field.leakage)

    def test_json_deterministic_bytes(self, rng):
        field = make_field(rng)
        a = fileio.field_json_text(field, "exact", {"seed": 1})
        b = fileio.field_json_text(field, "exact", {"seed": 1})
        assert a == b

    def test_csv_round_trip(self, rng, tmp_path):
        field = make_field(rng)
        path = tmp_path / "f.csv"
        fileio.write_field_csv(path, field)
        loaded = fileio.read_field_csv(path, field.grid)
        assert np.array_equal(loaded.w, field.w)
        assert np.array_equal(loaded.stderr, field.stderr)

    def test_grid_mismatch_detected(self, rng):
        a = make_field(rng)
        other = PhaseSpaceGrid(-1.0, 1.0, 3, -0.5, 0.5, 4)
        b = make_field(rng, grid=other)
        with pytest.raises(GridMismatchError):
            fileio.check_same_grid(a, b)


class TestConfig:
    def test_defaults_mirror_reference_run(self):
        config = cli.resolve_config()
        assert config["state"]["beta_re"] == 2.0
        assert config["drive"]["eta"] == 0.1
        assert config["sampler"]["trials"] == 1000
        assert (config["grid"]["n_re"], config["grid"]["n_im"]) == (25, 15)

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError):
            cli.resolve_config({"bogus": 1})

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError):
            cli.resolve_config({"sampler": {"rials": 10}})

    def test_overrides_beat_file(self):
        config = cli.resolve_config({"sampler": {"trials": 5}},
                                    {"sampler": {"trials": 9}})
        assert config["sampler"]["trials"] == 9

    def test_manifest_reuse(self, tmp_path):
        manifest = {
            "format": fileio.MANIFEST_FORMAT,
            "config": {"sampler": {"trials": 77}},
        }
        path = tmp_path / "m.json"
        path.write_text(json.dumps(manifest))
        assert cli.load_config(path) == {"sampler": {"trials": 77}}

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            cli.load_config("/nonexistent/config.json")


def run_cli(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def tiny_runs(tmp_path_factory):
    """One exact and one sampled run on a small shared grid."""
    root = tmp_path_factory.mktemp("cli")
    grid_flag = "-1.2,1.2,5,-0.8,0.8,3"
    assert run_cli("exact", "--beta", "1", "--grid=" + grid_flag,
                   "--out-dir", str(root / "exact")) == 0
    assert run_cli("sample", "--beta", "1", "--grid=" + grid_flag, "--trials", "150",
                   "--seed", "99", "--out-dir", str(root / "sample")) == 0
    return root


class TestCliRuns:
    def test_exact_outputs(self, tiny_runs):
        out = tiny_runs / "exact"
        for name in ("field_exact.json", "field_exact.csv", "marginals_report.json",
                     "run_manifest.json", "wigner_exact.png"):
            assert (out / name).exists(), name

    def test_sample_outputs(self, tiny_runs):
        out = tiny_runs / "sample"
        for name in ("field_sampled.json", "field_sampled.csv", "schedule_report.json",
                     "run_manifest.json", "wigner_sampled.png"):
            assert (out / name).exists(), name

    def test_compare_passes(self, tiny_runs, tmp_path):
        code = run_cli("compare", str(tiny_runs / "exact" / "field_exact.json"),
                       str(tiny_runs / "sample" / "field_sampled.json"),
                       "--out-dir", str(tmp_path / "cmp"))
        assert code == 0
        report = json.loads((tmp_path / "cmp" / "compare_report.json").read_text())
        assert report["pass"]
        assert (tmp_path / "cmp" / "compare.png").exists()

    def test_compare_identical_files(self, tiny_runs, tmp_path):
        exact = str(tiny_runs / "exact" / "field_exact.json")
        code = run_cli("compare", exact, exact, "--out-dir", str(tmp_path / "self"),
                       "--no-figures")
        assert code == 0
        report = json.loads((tmp_path / "self" / "compare_report.json").read_text())
        for comp in report["components"].values():
            assert comp["max_abs_error"] == 0.0

    def test_compare_corrupted_fails(self, tiny_runs, tmp_path):
        doc = json.loads((tiny_runs / "sample" / "field_sampled.json").read_text())
        for rec in doc["data"]:
            rec["w11"] = rec["w11"] + 25.0
        bad = tmp_path / "corrupt.json"
        bad.write_text(json.dumps(doc))
        code = run_cli("compare", str(tiny_runs / "exact" / "field_exact.json"),
                       str(bad), "--out-dir", str(tmp_path / "cmpbad"), "--no-figures")
        assert code == 3

    def test_compare_grid_mismatch(self, tiny_runs, tmp_path):
        assert run_cli("exact", "--beta", "1", "--grid=-1,1,3,-1,1,3",
                       "--out-dir", str(tmp_path / "other"), "--no-figures") == 0
        code = run_cli("compare", str(tmp_path / "other" / "field_exact.json"),
                       str(tiny_runs / "sample" / "field_sampled.json"),
                       "--out-dir", str(tmp_path / "cmpgrid"), "--no-figures")
        assert code == 1

    def test_exact_origin_coherence(self, tiny_runs):
        # w21(0) = -1/pi for the entangled superposition, real and negative
        field, _, _ = fileio.read_field_json(tiny_runs / "exact" / "field_exact.json")
        alphas = field.grid.alphas()
        origin = int(np.argmin(np.abs(alphas)))
        assert alphas[origin] == 0.0
        assert field.w[origin, 0, 1].real == pytest.approx(-1.0 / np.pi, abs=1e-9)
        assert abs(field.w[origin, 0, 1].imag) <= 1e-9

    def test_excited_lobe_peaks_at_beta(self):
        config = cli.resolve_config({
            "state": {"beta_re": 1.0},
            "grid": {"re_min": -2.0, "re_max": 2.0, "n_re": 9,
                     "im_min": -0.5, "im_max": 0.5, "n_im": 3},
        })
        grid = PhaseSpaceGrid(**config["grid"])
        state, _ = cli._build_state(config, grid)
        field = wigner.wigner_field_exact(state, grid)
        alphas = grid.alphas()
        peak = alphas[np.argmax(field.w[:, 1, 1].real)]
        assert peak == pytest.approx(1.0)


class TestDeterminism:
    def test_rerun_identical_bytes(self, tmp_path):
        args = ["sample", "--beta", "1", "--grid=-1,1,4,-1,1,3",
                "--trials", "60", "--seed", "4", "--no-figures"]
        assert run_cli(*args, "--out-dir", str(tmp_path / "a")) == 0
        assert run_cli(*args, "--out-dir", str(tmp_path / "b")) == 0
        assert ((tmp_path / "a" / "field_sampled.json").read_bytes()
                == (tmp_path / "b" / "field_sampled.json").read_bytes())

    def test_manifest_reproduces_run(self, tmp_path):
        args = ["sample", "--beta", "1", "--grid=-1,1,4,-1,1,3",
                "--trials", "60", "--seed", "4", "--no-figures"]
        assert run_cli(*args, "--out-dir", str(tmp_path / "a")) == 0
        assert run_cli("sample", "--config", str(tmp_path / "a" / "run_manifest.json"),
                       "--out-dir", str(tmp_path / "b")) == 0
        # the manifest pins figures=False and all sampling parameters
        assert ((tmp_path / "a" / "field_sampled.json").read_bytes()
                == (tmp_path / "b" / "field_sampled.json").read_bytes())


class TestErrorPaths:
    def test_unknown_config_key_exit(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"samplr": {}}')
        assert run_cli("exact", "--config", str(path), "--no-figures") == 1

    def test_bad_flag_exit(self, capsys):
        assert run_cli("exact", "--grid", "1,2,3") == 1
        capsys.readouterr()

    def test_infeasible_schedule_exit(self, tmp_path):
        # a point atom (eta = 0) has a degenerate spectrum: no filtering possible
        code = run_cli("sample", "--beta", "0.5", "--eta", "0",
                       "--grid=-0.5,0.5,3,-0.5,0.5,3", "--trials", "5",
                       "--out-dir", str(tmp_path / "x"), "--no-figures")
        assert code == 2


class TestProductStateFile:
    def test_exact_run_factorises(self, tmp_path):
        rho = np.zeros((4, 4))
        rho[1, 1] = 1.0  # one vibrational quantum
        sigma = [[0.6, [0.1, 0.2]], [[0.1, -0.2], 0.4]]
        doc = {"rho": rho.tolist(), "sigma": sigma}
        state_file = tmp_path / "state.json"
        state_file.write_text(json.dumps(doc))
        config = {
            "state": {"type": "product", "file": str(state_file)},
            "grid": {"re_min": -1.0, "re_max": 1.0, "n_re": 3,
                     "im_min": -1.0, "im_max": 1.0, "n_im": 3},
            "output": {"directory": str(tmp_path / "out"), "figures": False},
        }
        config_file = tmp_path / "config.json"
        config_file.write_text(json.dumps(config))
        assert run_cli("exact", "--config", str(config_file)) == 0
        field, _, _ = fileio.read_field_json(tmp_path / "out" / "field_exact.json")
        origin = int(np.argmin(np.abs(field.grid.alphas())))
        # W(0) of |1><1| is -2/pi; blocks scale with sigma
        assert field.w[origin, 0, 0].real == pytest.approx(0.6 * -2 / np.pi, abs=1e-9)
        assert field.w[origin, 0, 1] == pytest.approx(
            complex(0.1, 0.2) * -2 / np.pi, abs=1e-9)


def test_single_trial_smoke_run_is_fast(tmp_path):
    # one trial per setting over the full default grid
    import time

    t0 = time.perf_counter()
    code = run_cli("sample", "--trials", "1", "--out-dir", str(tmp_path / "smoke"),
                   "--no-figures")
    elapsed = time.perf_counter() - t0
    assert code == 0
    assert elapsed < 10.0


def test_degenerate_single_point_grid(tmp_path):
    code = run_cli("exact", "--beta", "0.5", "--grid", "0,0,1,0,0,1",
                   "--out-dir", str(tmp_path / "single"), "--no-figures")
    assert code == 0
    field, _, _ = fileio.read_field_json(tmp_path / "single" / "field_exact.json")
    assert len(field) == 1
