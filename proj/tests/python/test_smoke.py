import math
import os
from pathlib import Path

import numpy as np
import pytest

import sdrnw

DATA = Path(os.environ.get("SDRNW_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_kernel_constants():
    k = sdrnw.make_kernel("triweight", 1)
    assert abs(k.norm_const - 35 / 32) <= 1e-10
    assert abs(k.l2_const - 350 / 429) <= 1e-10
    assert k.smooth
    assert k(np.array([0.0])) == pytest.approx(35 / 32, rel=1e-14)
    assert all(ok for _, ok in k.conditions().values())
    assert not sdrnw.make_kernel("uniform", 1).smooth


def test_reduction_recovers_direction():
    x, y = sdrnw.sample(2, 2000, seed=3)
    b = sdrnw.pfc(x, y, 1)
    assert b.shape == (1, 20)
    assert np.allclose(b @ b.T, np.eye(1), atol=1e-10)
    assert abs((b @ sdrnw.beta0(2).T).item()) >= 0.9


def test_projection_round_trip_and_errors():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    b0 = q[:, :2].T
    b = sdrnw.projection_to_basis(b0.T @ b0, 2)
    assert np.max(sdrnw.principal_angles(b, b0)) <= 1e-8
    with pytest.raises(sdrnw.AmbiguousRankError):
        sdrnw.projection_to_basis(b0.T @ b0, 1)
    with pytest.raises(ValueError):
        sdrnw.projection_to_basis(b0.T @ b0 + 0.01, 2)


def test_nw_fit_constant_and_empty_window():
    x = np.linspace(-1, 1, 21).reshape(-1, 1)
    fit = sdrnw.nw_fit(x, np.full(21, 3.7), np.array([0.1]), h=0.5)
    assert fit["eta_hat"] == 3.7
    assert fit["sigma2_hat"] == 0.0
    with pytest.raises(sdrnw.EmptyWindowError):
        sdrnw.nw_fit(x, np.zeros(21), np.array([5.0]), h=0.5)
    with pytest.raises(ValueError):
        sdrnw.nw_fit(x, np.zeros(20), np.array([0.0]), h=0.5)


def test_model_truth_is_close_to_fit():
    x, y = sdrnw.sample(1, 4000, seed=5)
    b = sdrnw.beta0(1)
    x0 = 0.5 * np.ones(6)
    fit = sdrnw.nw_fit(x, y, x0, basis=b, h=0.3)
    truth = sdrnw.truth(1, x0.reshape(1, -1))[0]
    assert truth == pytest.approx((b @ x0).item() ** 2, rel=1e-14)
    assert fit["ci_lo"] - 0.1 <= truth <= fit["ci_hi"] + 0.1


def test_run_command_fit_and_simulate(tmp_path):
    out, manifest = sdrnw.run_command("kernel-check", {"profile": "triweight", "dim": 2})
    assert out["norm_const"] == pytest.approx(4 / math.pi, abs=1e-12)
    assert manifest is None

    cfg = {
        "input": str(DATA / "mussels_lookalike.csv"),
        "response": "M",
        "transforms": ["H:log", "W:log", "L:log", "S:log", "M:log"],
        "method": "pls",
        "d": 1,
    }
    report, _ = sdrnw.run_command("fit", cfg)
    assert len(report["records"]) == 79
    assert all(r["ci_lo"] <= r["eta_hat"] <= r["ci_hi"] for r in report["records"])

    spec = {"model": 1, "ns": [100, 200], "n_rep": 5, "n_test_points": 2, "equivalence": False, "coverage": False}
    _, manifest = sdrnw.run_command("simulate", spec, tmp_path)
    assert "emse.csv" in manifest["outputs"]
    assert (tmp_path / "emse.csv").read_text().startswith("point,method,n,")
