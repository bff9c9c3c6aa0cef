"""
Unit tests for the experiments module.

Every kind is run end to end on a small configuration.
"""

import json
import math

import pytest

from poiseuille import experiments
from poiseuille.config import loads
from poiseuille.errors import (
    BlowUpError,
    ConfigurationError,
    FitError,
    NumericalError,
    OutputError,
    PoiseuilleError,
    UndefinedRatioError,
    VerificationError,
)
from poiseuille.experiments import (
    HANDLERS,
    exit_code,
    parallel_map,
    run_experiment,
)
from poiseuille.output import read_csv, read_manifest

from .utils import MockLogger, small_config


def _config(tmp_path, kind, time=None, n_y=None, **experiment):
    document = small_config(kind, **experiment)
    if n_y is not None:
        document["grid"]["n_y"] = n_y
    document["output_dir"] = str(tmp_path / "out")
    if time is not None:
        document["time"] = time
    return loads(json.dumps(document))


def test_exit_code():
    """
    Test the mapping from failures to exit statuses.
    """
    assert exit_code(ConfigurationError("x")) == 2
    assert exit_code(OutputError("x")) == 2
    assert exit_code(NumericalError("x")) == 3
    assert exit_code(BlowUpError(1.0)) == 3
    assert exit_code(UndefinedRatioError("x")) == 3
    assert exit_code(FitError("x")) == 3
    assert exit_code(VerificationError(1.0, 0.1)) == 4
    assert exit_code(PoiseuilleError("x")) == 1


def test_parallel_map():
    """
    Test that the process pool keeps the input order.
    """
    cells = list(range(20))

    assert parallel_map(math.factorial, cells, workers=4) == [
        math.factorial(x) for x in cells
    ]
    assert parallel_map(lambda x: -x, cells) == [-x for x in cells]

    with pytest.raises(ConfigurationError):
        parallel_map(abs, cells, workers=0)


def test_linear_decay(tmp_path):
    """
    Test the linear-decay kind and its files.
    """
    config = _config(tmp_path, "linear-decay", plots=True)
    manifest = run_experiment(config, logger=MockLogger())
    out = tmp_path / "out"

    assert manifest.status == "ok"
    for name in ("linear_decay_k0", "linear_decay_k1"):
        assert (out / f"{name}.csv").is_file()
        assert (out / f"{name}.svg").is_file()

    data = read_csv(out / "linear_decay_k1.csv")
    assert list(data) == [
        "t",
        "energy",
        "dissipation",
        "energy_rate",
        "l2_squared",
        "shear_energy",
    ]
    assert data["t"].size == 11

    written = read_manifest(out / "manifest.json")
    assert written["status"] == "ok"
    assert written["exit_code"] == 0
    assert "manifest.json" in written["files"]
    assert len(written["summary"]["cells"]) == 2
    assert written["config"]["experiment"]["kind"] == "linear-decay"


def test_linear_decay_at_zero_horizon(tmp_path):
    """
    Test that T = 0 gives one row per frequency and no fitted rate.
    """
    config = _config(
        tmp_path, "linear-decay", time={"dt": 0.05, "T": 0.0}
    )
    manifest = run_experiment(config, logger=MockLogger())

    data = read_csv(tmp_path / "out" / "linear_decay_k1.csv")
    assert data["t"].size == 1
    assert all(
        math.isnan(cell["fitted_rate"]) for cell in manifest.summary["cells"]
    )


def test_verify_identities(tmp_path):
    """
    Test the verify-identities kind on both sides of its tolerance.
    """
    config = _config(
        tmp_path, "verify-identities", n_y=128, k_list=[0.0, 3.0]
    )
    manifest = run_experiment(config, logger=MockLogger())

    assert manifest.summary["worst_residual"] < 1e-7
    data = read_csv(tmp_path / "out" / "identities.csv")
    assert data["k"].tolist() == [0.0, 3.0]

    strict = _config(
        tmp_path,
        "verify-identities",
        n_y=128,
        k_list=[0.0, 3.0],
        tolerance=1e-30,
    )
    with pytest.raises(VerificationError):
        run_experiment(strict, logger=MockLogger())

    written = read_manifest(tmp_path / "out" / "manifest.json")
    assert written["status"] == "failed"
    assert written["exit_code"] == 4
    assert "identities.csv" in written["files"]


def test_equivalence_band(tmp_path):
    """
    Test the equivalence-band kind.
    """
    config = _config(tmp_path, "equivalence-band", k_list=[0.0, 1.0, 5.0])
    manifest = run_experiment(config, workers=2, logger=MockLogger())

    low, high = manifest.summary["band"]
    assert 0 < low <= high
    data = read_csv(tmp_path / "out" / "equivalence.csv")
    assert data["ratio"].size == 6


def test_rate_sweep(tmp_path):
    """
    Test the rate-sweep kind and its per-cell comparison.
    """
    config = _config(
        tmp_path,
        "rate-sweep",
        k_list=[1.0, 4.0, 8.0],
        nu_list=[0.1, 0.05],
    )
    manifest = run_experiment(config, workers=3, logger=MockLogger())

    data = read_csv(tmp_path / "out" / "rate_sweep.csv")
    assert data["k"].size == 6
    assert set(data["enhanced"]) <= {0.0, 1.0}
    assert len(manifest.summary["cells"]) == 6
    assert all(
        cell["heat_rate"] == cell["nu"] for cell in manifest.summary["cells"]
    )
    for cell in manifest.summary["cells"]:
        assert cell["dt"] == 0.05
        assert cell["fitted_rate"] - cell["shear_rate"] == pytest.approx(
            2.0 * cell["nu"] * cell["k"] ** 2
        )
    assert "shear_rate" in data


def test_nonlinear_bootstrap(tmp_path):
    """
    Test the nonlinear-bootstrap kind from small data.
    """
    config = _config(
        tmp_path,
        "nonlinear-bootstrap",
        time={"dt": 0.05, "T": 0.1},
        amplitude=1e-3,
        k0=0.5,
        sigma_k=0.5,
        plots=True,
    )
    manifest = run_experiment(config, logger=MockLogger())
    out = tmp_path / "out"

    summary = manifest.summary
    assert summary["bound_held"]
    assert len(summary["budget"]) == 8
    assert summary["epsilon_initial"] > 0
    assert (out / "bootstrap.svg").is_file()

    data = read_csv(out / "bootstrap.csv")
    assert data["t"].size == 3
    assert data["energy_ratio"][0] == 1.0


def test_bootstrap_field_is_built_once(tmp_path, monkeypatch):
    """
    Test that the bootstrap builds its initial field a single time.
    """
    calls = []
    build = experiments._bootstrap_field

    def counted(*args, **kwargs):
        calls.append(args)
        return build(*args, **kwargs)

    monkeypatch.setattr(experiments, "_bootstrap_field", counted)
    config = _config(
        tmp_path,
        "nonlinear-bootstrap",
        time={"dt": 0.05, "T": 0.1},
        amplitude=1e-3,
        k0=0.5,
        sigma_k=0.5,
    )
    run_experiment(config, logger=MockLogger())

    assert len(calls) == 1


def test_threshold_sweep(tmp_path):
    """
    Test the threshold-sweep kind with absolute amplitudes.
    """
    config = _config(
        tmp_path,
        "threshold-sweep",
        time={"dt": 0.05, "T": 0.1},
        amplitude=1e-3,
        amplitudes=[1e-3, 2e-3],
        amplitude_mode="absolute",
        k0=0.5,
        sigma_k=0.5,
    )
    manifest = run_experiment(config, workers=2, logger=MockLogger())

    data = read_csv(tmp_path / "out" / "threshold_sweep.csv")
    assert data["amplitude"].tolist() == [1e-3, 2e-3]
    assert data["blowup"].tolist() == [0.0, 0.0]
    assert len(manifest.summary["cells"]) == 2


def test_failed_run_writes_a_manifest(tmp_path, monkeypatch):
    """
    Test that a numerical failure is recorded before it is raised.
    """

    def _blow_up(*args, **kwargs):
        raise BlowUpError(0.25)

    monkeypatch.setattr(
        "poiseuille.experiments.bootstrap_experiment", _blow_up
    )
    config = _config(
        tmp_path,
        "nonlinear-bootstrap",
        time={"dt": 0.05, "T": 0.1},
        amplitude=1e-3,
    )

    with pytest.raises(BlowUpError):
        run_experiment(config, logger=MockLogger())

    written = read_manifest(tmp_path / "out" / "manifest.json")
    assert written["status"] == "failed"
    assert written["exit_code"] == 3
    assert "0.25" in written["error"]


def test_unexpected_failure_is_recorded(tmp_path, monkeypatch):
    """
    Test that an exception outside the toolkit's own still ends the manifest
    as failed before it propagates.
    """

    def _broken(context):
        raise RuntimeError("disk on fire")

    monkeypatch.setitem(HANDLERS, "linear-decay", _broken)
    config = _config(tmp_path, "linear-decay")

    with pytest.raises(RuntimeError):
        run_experiment(config, logger=MockLogger())

    written = read_manifest(tmp_path / "out" / "manifest.json")
    assert written["status"] == "failed"
    assert written["exit_code"] == 1
    assert "RuntimeError" in written["error"]
    assert "disk on fire" in written["error"]


def test_reruns_are_byte_identical(tmp_path):
    """
    Test that a fixed seed reproduces every CSV byte for byte, whatever the
    number of workers.
    """
    for kind in ("linear-decay", "equivalence-band"):
        outputs = []
        for name, workers in (("first", 1), ("second", 1), ("third", 2)):
            config = _config(tmp_path / kind / name, kind)
            run_experiment(config, workers=workers, logger=MockLogger())
            outputs.append(
                {
                    path.name: path.read_bytes()
                    for path in sorted(
                        (tmp_path / kind / name / "out").glob("*.csv")
                    )
                }
            )
        assert outputs[0]
        assert outputs[0] == outputs[1] == outputs[2]


def test_automatic_time_step_must_settle(tmp_path, monkeypatch):
    """
    Test that an automatic dt is refined, and that a rate which never
    settles fails the run.
    """
    time = {"dt": None, "T": 0.5}
    config = _config(
        tmp_path, "rate-sweep", time=time, k_list=[1.0], nu_list=[0.1]
    )
    manifest = run_experiment(config, logger=MockLogger())
    (cell,) = manifest.summary["cells"]
    assert cell["dt"] < 0.05 / 1.1
    assert math.isfinite(cell["fitted_rate"])

    monkeypatch.setattr("poiseuille.experiments.RATE_SETTLE", -1.0)
    monkeypatch.setattr("poiseuille.experiments.MAX_REFINEMENTS", 1)
    with pytest.raises(NumericalError):
        run_experiment(config, logger=MockLogger())
    written = read_manifest(tmp_path / "out" / "manifest.json")
    assert written["exit_code"] == 3
    assert "did not settle" in written["error"]


def _scaling_config(tmp_path, n_y, **experiment):
    document = small_config("rate-sweep", fit_skip=0.3, **experiment)
    document["grid"] = {"L_y": 4.0, "n_y": n_y}
    document["physics"] = {"nu": 1e-3}
    document["time"] = {"dt": None, "T": None}
    document["output_dir"] = str(tmp_path / "out")
    return loads(json.dumps(document))


def test_rate_sweep_scales_with_nu(tmp_path):
    """
    Test the enhanced-dissipation scaling in nu at k = 80: the rate left
    after the x-diffusion is removed grows like nu^(1/2), and the total rate
    beats the heat rate nu by far.
    """
    config = _scaling_config(
        tmp_path, 384, k_list=[80.0], nu_list=[1e-3, 4e-3, 1.6e-2]
    )
    manifest = run_experiment(config, logger=MockLogger())
    summary = manifest.summary

    assert 0.4 <= summary["slope_vs_nu"]["80"] <= 0.6
    for cell in summary["cells"]:
        assert cell["enhanced"]
        assert cell["enhancement"] >= 10.0
        assert cell["dt"] <= 4.0 / (cell["k"] * 3.5**2)


def test_rate_sweep_scales_with_k(tmp_path):
    """
    Test the enhanced-dissipation scaling in k at nu = 1e-3, above the
    threshold cell where the Biot-Savart part still adds to the rate.
    """
    config = _scaling_config(
        tmp_path, 448, k_list=[20.0, 40.0, 80.0, 160.0], nu_list=[1e-3]
    )
    manifest = run_experiment(config, logger=MockLogger())

    assert 0.4 <= manifest.summary["slope_vs_k"]["0.001"] <= 0.6
    rates = [cell["shear_rate"] for cell in manifest.summary["cells"]]
    assert rates == sorted(rates)
