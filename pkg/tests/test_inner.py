import numpy as np
import pytest

from oracles import angular_distance, covariance_surrogate_grid, phase_grid
from risregion.ao import StopRule, run_ao
from risregion.inner import normalize_phases, solve_covariance_surrogate, solve_ris_surrogate
from risregion.rates import (
    CovarianceSet,
    SignalingStructure,
    common_rate,
    complex_structure,
    private_rate,
)
from risregion.surrogate import (
    build_common_cov_bound,
    build_common_phase_bound,
    build_private_cov_bound,
    build_private_phase_bound,
    linearize_unit_modulus,
)
from risregion.validation import random_covariances, random_profile, random_scene
from risregion.wlmodel import ComplexScene, IqiProfile, LinkModel, RisPhases, real_links


def _bounds(links, cov, K, common=True):
    private = [build_private_cov_bound(links, cov, k) for k in range(K)]
    commons = [build_common_cov_bound(links, cov, k) for k in range(K)] if common else []
    return private, commons


def test_single_user_capacity():
    scene = ComplexScene(np.ones((1, 1, 1)), np.zeros((1, 1, 0)), np.zeros((0, 1)), 1.0, 10.0)
    links = real_links(scene, IqiProfile.perfect(1, 1, 1))
    cov0 = CovarianceSet.white(1, 1, 10.0, include_common=False)
    private, _ = _bounds(links, cov0, 1, common=False)
    cov, rep = solve_covariance_surrogate(private, [], 10.0, "proper", [1.0], cov0, use_common=False)
    assert rep.objective == pytest.approx(np.log2(11), abs=1e-6)
    assert rep.status == "converged"
    assert np.trace(cov.P[0]) == pytest.approx(10.0, abs=1e-6)
    assert np.all(cov.P_c == 0)


def test_degenerate_weight_maximizes_user_one(rng):
    # expansion point with user 2 silent: the bound for user 1 is exact
    scene = random_scene(rng, 2, 1, 1)
    links = real_links(scene, IqiProfile.perfect(2, 1, 1))
    cov0 = CovarianceSet(np.zeros((2, 2)), np.array([5.0 * np.eye(2), np.zeros((2, 2))]), np.zeros(2))
    private, _ = _bounds(links, cov0, 2, common=False)
    cov, rep = solve_covariance_surrogate(private, [], 10.0, "improper", [1.0, 0.0], cov0, use_common=False)
    ref = np.log2(1 + abs(scene.F[0, 0, 0]) ** 2 * 10.0)
    assert rep.objective == pytest.approx(ref, abs=1e-6)
    assert np.trace(cov.P[1]) <= 1e-6


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("iqi", [False, True])
def test_covariance_solver_matches_grid(seed, iqi):
    rng = np.random.default_rng(100 + seed)
    scene = random_scene(rng, 2, 1, 1)
    prof = IqiProfile.uniform(2, 1, 1, 0.8, 0.0, 0.9, 10.0) if iqi else IqiProfile.perfect(2, 1, 1)
    links = real_links(scene, prof)
    w = rng.dirichlet(np.ones(3)) * 10.0
    cov0 = CovarianceSet(w[0] / 2 * np.eye(2), np.array([w[1] / 2 * np.eye(2), w[2] / 2 * np.eye(2)]), np.zeros(2))
    private, common = _bounds(links, cov0, 2)
    cov, rep = solve_covariance_surrogate(private, common, 10.0, "proper", [0.5, 0.5], cov0)
    grid_best, _ = covariance_surrogate_grid(private, common, 10.0, (0.5, 0.5), step=0.01)
    assert rep.objective >= grid_best - 1e-6
    assert rep.objective <= grid_best + 1e-4


def test_covariance_solver_feasibility_and_structure(rng):
    for _ in range(5):
        scene = random_scene(rng, 2, 2, 2)
        links = real_links(scene, random_profile(rng, 2, 2, 2))
        cov0 = random_covariances(rng, 2, 2, 10.0)
        private, common = _bounds(links, cov0, 2)
        alpha = rng.dirichlet(np.ones(2))
        base_obj = min((private[k].value(cov0) + 0.0) / alpha[k] for k in range(2))
        for sig in ("proper", "improper"):
            cov, rep = solve_covariance_surrogate(private, common, 10.0, sig, alpha, cov0)
            assert rep.residual <= 1e-7 and rep.gap <= 1e-5
            assert cov.total_power <= 10.0 + 1e-9
            for M in [cov.P_c, *cov.P]:
                assert np.linalg.eigvalsh(M).min() >= -1e-9
            assert np.all(cov.rc_alloc >= 0)
            assert cov.rc_alloc.sum() <= min(c.value(cov) for c in common) + 1e-7
            if sig == "proper":
                J = complex_structure(2)
                for M in [cov.P_c, *cov.P]:
                    assert np.linalg.norm(J @ M @ J.T - M) <= 1e-8 * max(np.linalg.norm(M), 1e-12)
            # MM ascent: at least as good as the expansion point with private rates only
            r = min((private[k].value(cov) + cov.rc_alloc[k]) / alpha[k] for k in range(2))
            assert r >= base_obj - 1e-7


def test_covariance_solver_deterministic(rng):
    scene = random_scene(rng, 2, 2, 1)
    links = real_links(scene, random_profile(rng, 2, 2, 1))
    cov0 = random_covariances(rng, 2, 2, 10.0)
    private, common = _bounds(links, cov0, 2)
    a, _ = solve_covariance_surrogate(private, common, 10.0, "improper", [0.3, 0.7], cov0)
    b, _ = solve_covariance_surrogate(private, common, 10.0, "improper", [0.3, 0.7], cov0)
    np.testing.assert_array_equal(a.P, b.P)
    np.testing.assert_array_equal(a.P_c, b.P_c)


def test_ris_solver_zero_power():
    rng = np.random.default_rng(5)
    scene = random_scene(rng, 2, 1, 1, n_ris=2)
    model = LinkModel(scene, IqiProfile.perfect(2, 1, 1))
    cov = CovarianceSet(np.zeros((2, 2)), np.zeros((2, 2, 2)), np.zeros(2))
    theta = RisPhases(np.exp(1j * rng.uniform(0, 2 * np.pi, 2)))
    private = [build_private_phase_bound(model, cov, theta, k) for k in range(2)]
    th, rep = solve_ris_surrogate(private, [], linearize_unit_modulus(theta), [0.5, 0.5], use_common=False)
    np.testing.assert_array_equal(th.theta, theta.theta)


def test_ris_solver_keeps_phases_without_ris_paths():
    rng = np.random.default_rng(6)
    scene = random_scene(rng, 2, 1, 1, n_ris=3)
    scene = ComplexScene(scene.F, np.zeros_like(scene.G), scene.G0, 1.0, 10.0)
    model = LinkModel(scene, IqiProfile.perfect(2, 1, 1))
    cov = CovarianceSet.white(2, 1, 10.0)
    theta = RisPhases(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
    private = [build_private_phase_bound(model, cov, theta, k) for k in range(2)]
    common = [build_common_phase_bound(model, cov, theta, k) for k in range(2)]
    th, _ = solve_ris_surrogate(private, common, linearize_unit_modulus(theta), [0.5, 0.5])
    np.testing.assert_array_equal(th.theta, theta.theta)


def test_ris_solver_output_within_relaxed_ring(rng):
    scene = random_scene(rng, 2, 2, 2, n_ris=4)
    model = LinkModel(scene, random_profile(rng, 2, 2, 2))
    cov = random_covariances(rng, 2, 2, 10.0)
    theta = RisPhases(np.exp(1j * rng.uniform(0, 2 * np.pi, 4)))
    eps = 0.05
    private = [build_private_phase_bound(model, cov, theta, k) for k in range(2)]
    common = [build_common_phase_bound(model, cov, theta, k) for k in range(2)]
    th, rep = solve_ris_surrogate(private, common, linearize_unit_modulus(theta, eps), [0.4, 0.6])
    mag = np.abs(th.theta)
    assert np.all(mag <= 1 + 1e-9) and np.all(mag >= np.sqrt(1 - eps) - 1e-9)
    assert rep.status == "converged"


def test_single_element_accepted_phase_matches_grid():
    # single user, one RIS element: the best phase aligns the RIS path with the direct path
    F = np.array([[[0.6 - 0.3j]]])
    G = np.array([[[0.5 + 0.2j]]])
    G0 = np.array([[0.9 - 0.4j]])
    scene = ComplexScene(F, G, G0, 1.0, 10.0)
    prof = IqiProfile.perfect(1, 1, 1)
    _, point = run_ao(scene, prof, "PT_IR", [1.0], stop=StopRule(rel_tol=1e-14, max_iter=300))
    cov = CovarianceSet.white(1, 1, 10.0, include_common=False)
    model = LinkModel(scene, prof)
    best, _, _ = phase_grid(lambda t: private_rate(model.links(RisPhases([t])), cov, 0))
    step = 2 * np.pi / 3600
    assert angular_distance(np.angle(point.theta[0]), best) <= step
    aligned = np.angle(F[0, 0, 0]) - np.angle(G[0, 0, 0] * G0[0, 0])
    assert angular_distance(best, aligned) <= step


def test_single_element_two_user_accepted_phase_matches_grid():
    rng = np.random.default_rng(21)
    scene = random_scene(rng, 2, 1, 1, n_ris=1)
    prof = IqiProfile.uniform(2, 1, 1, 0.9, 5.0, 1.1, 5.0)
    stop = StopRule(rel_tol=1e-14, max_iter=300)
    state, point = run_ao(scene, prof, "PR_IR", [0.5, 0.5], stop=stop)
    model = LinkModel(scene, prof)
    cov = state.cov

    def objective(t):
        links = model.links(RisPhases([t]))
        rp = [private_rate(links, cov, k) for k in range(2)]
        from risregion.rates import best_allocation
        return best_allocation(rp, common_rate(links, cov), [0.5, 0.5])[0]

    best, val, _ = phase_grid(objective)
    assert objective(point.theta[0]) >= val - 1e-9
    assert angular_distance(np.angle(point.theta[0]), best) <= 2 * np.pi / 3600


def test_normalize_phases():
    out = normalize_phases(RisPhases([0.9 * np.exp(1j * np.pi / 4)]))
    assert out.theta[0] == pytest.approx(np.exp(1j * np.pi / 4), abs=1e-15)
    unit = np.exp(1j * np.array([0.1, 2.0]))
    np.testing.assert_allclose(normalize_phases(unit).theta, unit, atol=1e-15)
    prev = RisPhases([1j, -1.0])
    out = normalize_phases(RisPhases([0.0, 0.5]), prev)
    assert out.theta[0] == 1j and out.theta[1] == 1.0
    assert out.is_feasible()
