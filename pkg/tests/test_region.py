import numpy as np
import pytest

import risregion.region as region
from risregion.ao import RegionPoint
from risregion.errors import SolverError, ValidationError
from risregion.region import (
    alpha_grid,
    parents,
    point_objective,
    sweep_region,
    sweep_schemes,
    tdma_timesharing,
    ts_boundary,
    ts_objective,
)
from risregion.validation import random_profile, random_scene
from risregion.wlmodel import IqiProfile


@pytest.fixture(scope="module")
def small():
    rng = np.random.default_rng(77)
    return random_scene(rng, 2, 1, 1), random_profile(rng, 2, 1, 1)


def test_alpha_grid_endpoints():
    np.testing.assert_array_equal(alpha_grid(2), [[0.0, 1.0], [1.0, 0.0]])
    g = alpha_grid(21)
    assert g.shape == (21, 2)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)
    with pytest.raises(ValidationError):
        alpha_grid(1)
    with pytest.raises(ValidationError):
        alpha_grid(5, K=3)


def test_parents():
    assert parents("PT") == []
    assert parents("IR") == ["PR", "IT"]
    assert parents("IR_IR") == ["IR"]
    assert parents("TS") == []


def test_point_objective_skips_zero_weights():
    p = RegionPoint(np.array([1.0, 0.0]), np.array([2.0, 5.0]), "PR", True, 3)
    assert point_objective(p) == 2.0
    p = RegionPoint(np.array([0.25, 0.75]), np.array([1.0, 1.5]), "PR", True, 3)
    assert point_objective(p) == 2.0


def test_sweep_points_follow_the_grid(small):
    scene, prof = small
    pts = sweep_region(scene, prof, "PR", n_alpha=3)
    assert [p.scheme for p in pts] == ["PR"] * 3
    np.testing.assert_array_equal([p.alpha for p in pts], alpha_grid(3))
    assert all(p.converged for p in pts)
    # weights at the endpoints serve one user only
    assert pts[0].rates[0] <= 1e-6 and pts[-1].rates[1] <= 1e-6


def test_nested_sweep_respects_scheme_inclusion(small):
    scene, prof = small
    res = sweep_schemes(scene, prof, ["PT", "IT", "PR", "IR"], n_alpha=5)
    obj = {k: np.array([point_objective(p) for p in v]) for k, v in res.items()}
    for big, sub in [("IT", "PT"), ("PR", "PT"), ("IR", "PR"), ("IR", "IT")]:
        assert np.all(obj[big] >= obj[sub] - 1e-6), (big, sub)


def test_sweep_returns_requested_schemes_only(small):
    scene, prof = small
    res = sweep_schemes(scene, prof, ["IR"], n_alpha=2)
    assert list(res) == ["IR"]


def test_workers_do_not_change_results(small):
    scene, prof = small
    a = sweep_region(scene, prof, "IT", n_alpha=3, workers=1)
    b = sweep_region(scene, prof, "IT", n_alpha=3, workers=2)
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p.rates, q.rates)


def test_failed_points_are_recorded(small, monkeypatch):
    scene, prof = small

    def boom(*args, **kwargs):
        raise SolverError("synthetic failure", iteration=4)

    monkeypatch.setattr(region, "run_ao", boom)
    pts = sweep_region(scene, prof, "PR", n_alpha=3, multistart=False)
    assert len(pts) == 3
    assert all(p.status.startswith("failed") and not p.converged for p in pts)
    assert pts[0].iterations == 4


def test_ris_scheme_needs_ris(small):
    scene, prof = small
    with pytest.raises(ValidationError):
        sweep_schemes(scene, prof, ["PR_IR"], n_alpha=2)


def test_timesharing_segment(small):
    scene, prof = small
    pts = tdma_timesharing(scene, prof, n_tau=5)
    R = ts_boundary(pts)
    assert np.all(R > 0)
    np.testing.assert_allclose(pts[-1].rates, [R[0], 0.0])
    np.testing.assert_allclose(pts[0].rates, [0.0, R[1]])
    np.testing.assert_allclose(pts[2].rates, R / 2)
    for p in pts:
        np.testing.assert_allclose(p.alpha.sum(), 1.0)
    # single-user optimum with the full budget
    from risregion.ao import run_ao
    _, p1 = run_ao(scene, prof, "IT", [1.0, 0.0])
    assert R[0] == pytest.approx(p1.rates[0], abs=1e-12)


def test_ts_scheme_through_sweep(small):
    scene, prof = small
    pts = sweep_region(scene, prof, "TS")
    assert len(pts) == region.TS_GRID and pts[0].scheme == "TS"


@pytest.mark.parametrize("alpha", [(0.5, 0.5), (0.2, 0.8), (0.9, 0.1)])
def test_ts_objective_matches_brute_force(alpha):
    R = np.array([3.0, 1.2])
    tau = np.linspace(0, 1, 200001)
    brute = np.max(np.minimum(tau * R[0] / alpha[0], (1 - tau) * R[1] / alpha[1]))
    assert ts_objective(R, alpha) == pytest.approx(brute, abs=1e-4)
    assert ts_objective([0.0, 1.0], alpha) == 0.0
