"""Self-checks runnable from the command line (``risregion validate``).

Each suite returns a list of :class:`Check` results; the checks are quick
versions of the invariants exercised by the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ao import run_ao
from .inner import solve_covariance_surrogate
from .rates import (
    CovarianceSet,
    SignalingStructure,
    common_rate_at_user,
    covariance_basis,
    private_rate,
)
from .scenario import fixture_config, generate_scene
from .surrogate import (
    build_common_cov_bound,
    build_common_phase_bound,
    build_private_cov_bound,
    build_private_phase_bound,
)
from .wlmodel import (
    ComplexScene,
    IqiProfile,
    LinkModel,
    RisPhases,
    build_iqi_matrices,
    real_decompose,
    real_links,
    stack_real,
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


# ------------------------------------------------------------ random data


def random_complex(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_profile(rng, K, n_bs, n_u, spread=0.3, max_phase_deg=20.0):
    """IQI profile with amplitudes in ``1 +- spread`` and phases within
    ``max_phase_deg`` degrees."""
    ph = np.deg2rad(max_phase_deg)
    return IqiProfile(
        1 + spread * rng.uniform(-1, 1, n_bs),
        rng.uniform(-ph, ph, n_bs),
        1 + spread * rng.uniform(-1, 1, (K, n_u)),
        rng.uniform(-ph, ph, (K, n_u)),
    )


def random_scene(rng, K=2, n_bs=1, n_u=1, n_ris=0, P_total=10.0, sigma2=1.0):
    return ComplexScene(random_complex(rng, K, n_u, n_bs), random_complex(rng, K, n_u, n_ris),
                        random_complex(rng, n_ris, n_bs), sigma2, P_total)


def random_psd(rng, n, scale=1.0, proper=False):
    A = rng.standard_normal((n, n))
    P = A @ A.T
    P *= scale / np.trace(P)
    if proper:
        J = np.block([[np.zeros((n // 2, n // 2)), -np.eye(n // 2)], [np.eye(n // 2), np.zeros((n // 2, n // 2))]])
        P = 0.5 * (P + J @ P @ J.T)
    return P


def random_covariances(rng, K, n_bs, P_total, with_common=True):
    """Random PSD covariances whose traces split ``P_total`` at random."""
    w = rng.dirichlet(np.ones(K + 1))
    if not with_common:
        w[0] = 0.0
        w /= w.sum()
    n = 2 * n_bs
    P_c = random_psd(rng, n, w[0] * P_total) if w[0] > 0 else np.zeros((n, n))
    P = np.array([random_psd(rng, n, w[k + 1] * P_total) for k in range(K)])
    return CovarianceSet(P_c, P, np.zeros(K))


# ----------------------------------------------------------------- suites


def _wl_suite(rng):
    out = []
    worst = 0.0
    for _ in range(100):
        K, n_bs, n_u = 1, int(rng.integers(1, 3)), int(rng.integers(1, 3))
        H = random_complex(rng, n_u, n_bs)
        prof = random_profile(rng, K, n_bs, n_u)
        V1, V2, G1, G2 = build_iqi_matrices(prof)
        Hr, _ = real_decompose(H, V1, V2, G1[0], G2[0], 1.0)
        x = random_complex(rng, n_bs)
        s = H @ (V1 @ x + V2 @ x.conj())
        y = G1[0] @ s + G2[0] @ s.conj()
        ref = stack_real(y)
        worst = max(worst, np.linalg.norm(Hr @ stack_real(x) - ref) / np.linalg.norm(ref))
    out.append(Check("widely-linear equivalence (100 inputs)", worst <= 1e-12, f"max rel. error {worst:.2e}"))
    scene = random_scene(rng, 2, 2, 2, 0, sigma2=1.7)
    links = real_links(scene, IqiProfile.perfect(2, 2, 2))
    err = np.abs(links.Cn_real - 0.85 * np.eye(4)).max()
    out.append(Check("perfect-device noise covariance is sigma2/2 I", err == 0.0, f"max deviation {err:.1e}"))
    return out


def _rates_suite(rng):
    out = []
    worst = 0.0
    for _ in range(20):
        scene = random_scene(rng, 2, 2, 2)
        links = real_links(scene, random_profile(rng, 2, 2, 2))
        cov = random_covariances(rng, 2, 2, 10.0)
        for k in range(2):
            H, Cn = links.H_real[k], links.Cn_real[k]
            Y = Cn + H @ cov.P.sum(0) @ H.T
            ev = np.linalg.eigvals(np.linalg.solve(Y, H @ cov.P_c @ H.T))
            ref = 0.5 * np.sum(np.log2(1 + ev.real))
            worst = max(worst, abs(common_rate_at_user(links, cov, k) - ref))
    out.append(Check("common rate vs eigenvalue oracle", worst <= 1e-9, f"max abs. error {worst:.2e}"))
    scene = ComplexScene(np.ones((1, 1, 1)), np.zeros((1, 1, 0)), np.zeros((0, 1)), 1.0, 10.0)
    links = real_links(scene, IqiProfile.perfect(1, 1, 1))
    cov = CovarianceSet(np.zeros((2, 2)), np.array([5.0 * np.eye(2)]), np.zeros(1))
    r = private_rate(links, cov, 0)
    out.append(Check("single-user SISO rate log2(11)", abs(r - np.log2(11)) <= 1e-12, f"{r:.12f}"))
    return out


def _surrogate_suite(rng, instances=5, samples=100):
    tight, viol = 0.0, -np.inf
    for _ in range(instances):
        K, n_bs, n_u, n_ris = 2, 2, 2, 3
        scene = random_scene(rng, K, n_bs, n_u, n_ris)
        prof = random_profile(rng, K, n_bs, n_u)
        model = LinkModel(scene, prof)
        theta = RisPhases(np.exp(2j * np.pi * rng.random(n_ris)))
        links = model.links(theta)
        cov0 = random_covariances(rng, K, n_bs, 10.0)
        for k in range(K):
            bounds = [(build_private_cov_bound(links, cov0, k), lambda c, k=k: private_rate(links, c, k)),
                      (build_common_cov_bound(links, cov0, k), lambda c, k=k: common_rate_at_user(links, c, k))]
            for b, exact in bounds:
                tight = max(tight, abs(b.value(cov0) - exact(cov0)))
                for _ in range(samples):
                    c = random_covariances(rng, K, n_bs, 10.0)
                    viol = max(viol, b.value(c) - exact(c))
            pb = [(build_private_phase_bound(model, cov0, theta, k), lambda t, k=k: private_rate(model.links(t), cov0, k)),
                  (build_common_phase_bound(model, cov0, theta, k),
                   lambda t, k=k: common_rate_at_user(model.links(t), cov0, k))]
            for b, exact in pb:
                tight = max(tight, abs(b.value(theta) - exact(theta)))
                for _ in range(samples):
                    t = RisPhases(np.exp(2j * np.pi * rng.random(n_ris)))
                    viol = max(viol, b.value(t) - exact(t))
    return [
        Check("surrogates tight at expansion point", tight <= 1e-9, f"max gap {tight:.2e}"),
        Check("surrogates minorize exact rates", viol <= 1e-9, f"max excess {viol:.2e}"),
    ]


def _solver_suite(rng):
    scene = ComplexScene(np.ones((1, 1, 1)), np.zeros((1, 1, 0)), np.zeros((0, 1)), 1.0, 10.0)
    links = real_links(scene, IqiProfile.perfect(1, 1, 1))
    cov0 = CovarianceSet.white(1, 1, 10.0, include_common=False)
    priv = [build_private_cov_bound(links, cov0, 0)]
    cov, rep = solve_covariance_surrogate(priv, [], 10.0, SignalingStructure.PROPER, [1.0], cov0, use_common=False)
    basis_ok = covariance_basis(2, SignalingStructure.PROPER).shape[0] == 4
    return [
        Check("single-user capacity from covariance solver", abs(rep.objective - np.log2(11)) <= 1e-6,
              f"{rep.objective:.9f}"),
        Check("proper basis dimension", basis_ok),
    ]


def _ao_suite(rng):
    cfg = fixture_config("C1")
    scene = generate_scene(cfg)
    _, point = run_ao(scene, cfg.profile(), "PR", [0.5, 0.5])
    steps = np.diff(point.trace)
    worst = float(steps.min()) if steps.size else 0.0
    return [
        Check("AO trace non-decreasing (C1, PR)", worst >= -1e-8, f"min step {worst:.2e}"),
        Check("AO converged (C1, PR)", point.converged, f"{point.iterations} iterations"),
    ]


SUITES = {
    "wl": _wl_suite,
    "rates": _rates_suite,
    "surrogates": _surrogate_suite,
    "solver": _solver_suite,
    "ao": _ao_suite,
}


def run_suite(name, seed=0):
    """Run one suite (or ``"all"``) and return its checks."""
    rng = np.random.default_rng(seed)
    names = list(SUITES) if name == "all" else [name]
    checks = []
    for n in names:
        if n not in SUITES:
            raise KeyError(f"unknown suite {n!r}; available: {', '.join(SUITES)}, all")
        checks += [Check(f"[{n}] {c.name}", bool(c.passed), c.detail) for c in SUITES[n](rng)]
    return checks
