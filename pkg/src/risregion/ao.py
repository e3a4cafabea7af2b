"""Alternating optimization of transmit covariances and RIS phases for one
weight vector."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, RisRegionError, SolverError, ValidationError
from .inner import normalize_phases, solve_covariance_surrogate, solve_ris_surrogate
from .rates import CovarianceSet, best_allocation, common_rate, private_rates
from .schemes import parse_scheme
from .surrogate import (
    DEFAULT_EPSILON,
    build_common_cov_bound,
    build_common_phase_bound,
    build_private_cov_bound,
    build_private_phase_bound,
    linearize_unit_modulus,
)
from .wlmodel import LinkModel, RisPhases


@dataclass(frozen=True)
class StopRule:
    rel_tol: float = 1e-5
    patience: int = 3
    max_iter: int = 100


@dataclass
class AoState:
    iteration: int
    cov: CovarianceSet
    theta: RisPhases
    objective: float
    trace: list = field(default_factory=list)
    rejected_phases: int = 0
    rejected_covariances: int = 0
    alpha: np.ndarray = None


@dataclass
class RegionPoint:
    alpha: np.ndarray
    rates: np.ndarray
    scheme: str
    converged: bool
    iterations: int
    objective: float = 0.0
    trace: list = field(default_factory=list)
    status: str = "converged"
    theta: np.ndarray = None


def _check_alpha(alpha, K):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (K,) or np.any(alpha < 0) or abs(alpha.sum() - 1.0) > 1e-9:
        raise ValidationError(f"alpha must be a length-{K} probability vector")
    return alpha


def evaluate(model, cov, theta, alpha, use_common):
    """Exact objective and per-user rates at ``(cov, theta)`` with the best
    split of the decodable common rate."""
    links = model.links(theta)
    rp = private_rates(links, cov)
    rc = common_rate(links, cov) if use_common else 0.0
    obj, alloc = best_allocation(rp, rc, alpha)
    return obj, rp + alloc, alloc


class _Context:
    def __init__(self, scene, profile, scheme, alpha, epsilon):
        self.scheme = parse_scheme(scheme)
        if self.scheme.is_tdma:
            raise ConfigurationError("TDMA time sharing is handled by region.tdma_timesharing")
        if self.scheme.ris and scene.n_ris == 0:
            raise ConfigurationError(f"scheme {self.scheme.label} needs RIS channels in the scene")
        self.scene = scene if self.scheme.ris else scene.without_ris()
        self.model = LinkModel(self.scene, profile)
        self.alpha = _check_alpha(alpha, scene.n_users)
        self.epsilon = epsilon


def initial_state(scene, scheme, alpha=None, tilt=0.0, focus=None, share=0.5):
    """White uniform power split over the messages the scheme uses and
    all-ones RIS phases.

    With ``focus=k`` (rate-splitting schemes only) the budget is shared
    between the common message and user ``k``'s private message (which
    gets the fraction ``share``), the other private messages keeping a
    small white share.  Superposition
    with the private message on the stronger user is such a start.

    ``tilt`` in ``[0, 1)`` moves power of user ``k``'s private message
    between the in-phase and quadrature parts (direction alternating with
    ``k``), giving improper schemes a start off the proper subspace, where
    by symmetry the improper directions have zero gradient.
    """
    scheme = parse_scheme(scheme)
    K, n_bs, _, n_ris = scene.dims
    cov = CovarianceSet.white(K, n_bs, scene.P_total, include_common=scheme.uses_common)
    if focus is not None:
        if not scheme.uses_common:
            raise ConfigurationError("focused starts apply to rate-splitting schemes")
        eye = np.eye(2 * n_bs) / (2 * n_bs)
        small = 1e-3 * scene.P_total
        rest = scene.P_total - small * (K - 1)
        P = np.array([small * eye for _ in range(K)])
        P[focus] = share * rest * eye
        cov = CovarianceSet((1 - share) * rest * eye, P, np.zeros(K))
    if tilt:
        if not 0 <= tilt < 1:
            raise ValidationError("tilt must lie in [0, 1)")
        P = cov.P.copy()
        for k in range(K):
            sign = 1.0 if k % 2 == 0 else -1.0
            d = np.concatenate([np.full(n_bs, 1 + sign * tilt), np.full(n_bs, 1 - sign * tilt)])
            P[k] = P[k] * d[:, None]
        cov = CovarianceSet(cov.P_c, P, cov.rc_alloc)
    theta = RisPhases.identity(n_ris if scheme.ris else 0)
    alpha = None if alpha is None else np.asarray(alpha, dtype=float)
    return AoState(0, cov, theta, np.nan, alpha=alpha)


def lift_state(state, scene, scheme):
    """Reuse the covariances of ``state`` (found for a sub-scheme) as a
    starting point for ``scheme``.  RIS phases missing from ``state`` are
    set to one and the common message is dropped for TIN schemes."""
    scheme = parse_scheme(scheme)
    K, n_bs, _, n_ris = scene.dims
    n_target = n_ris if scheme.ris else 0
    theta = state.theta if len(state.theta) == n_target else RisPhases.identity(n_target)
    cov = state.cov
    if not scheme.uses_common:
        cov = CovarianceSet(np.zeros_like(cov.P_c), cov.P, np.zeros(K))
    return AoState(0, cov, theta, np.nan, alpha=state.alpha)


def _covariance_step(ctx, state):
    links = ctx.model.links(state.theta)
    K = ctx.scene.n_users
    private = [build_private_cov_bound(links, state.cov, k) for k in range(K)]
    common = [build_common_cov_bound(links, state.cov, k) for k in range(K)] if ctx.scheme.uses_common else []
    cov, report = solve_covariance_surrogate(
        private, common, ctx.scene.P_total, ctx.scheme.signaling, ctx.alpha, state.cov,
        use_common=ctx.scheme.uses_common,
    )
    return cov, report


def _phase_step(ctx, cov, theta):
    K = ctx.scene.n_users
    private = [build_private_phase_bound(ctx.model, cov, theta, k) for k in range(K)]
    use_common = ctx.scheme.uses_common and np.trace(cov.P_c) > 1e-12 * max(ctx.scene.P_total, 1e-300)
    common = [build_common_phase_bound(ctx.model, cov, theta, k) for k in range(K)] if use_common else []
    constraints = linearize_unit_modulus(theta, ctx.epsilon)
    theta_hat, report = solve_ris_surrogate(private, common, constraints, ctx.alpha, use_common=use_common)
    return normalize_phases(theta_hat, theta), report


def ao_iterate(state, scene, profile, scheme, alpha=None, epsilon=DEFAULT_EPSILON):
    """One covariance update followed (when the scheme has a RIS) by one
    phase update that is kept only if the exact objective does not drop.

    ``alpha`` defaults to ``state.alpha``.
    """
    alpha = state.alpha if alpha is None else alpha
    if alpha is None:
        raise ValidationError("ao_iterate needs a weight vector")
    ctx = _Context(scene, profile, scheme, alpha, epsilon)
    if not np.isfinite(state.objective):
        obj, _, alloc = evaluate(ctx.model, state.cov, state.theta, ctx.alpha, ctx.scheme.uses_common)
        state = replace(state, cov=replace(state.cov, rc_alloc=alloc), objective=obj)
    return _iterate(state, ctx)


def _iterate(state, ctx):
    t = state.iteration + 1
    use_common = ctx.scheme.uses_common
    try:
        cov_new, _ = _covariance_step(ctx, state)
    except RisRegionError as exc:
        raise SolverError(f"covariance block failed: {exc}", iteration=t) from exc
    obj_new, _, alloc = evaluate(ctx.model, cov_new, state.theta, ctx.alpha, use_common)
    rejected_cov = state.rejected_covariances
    if obj_new < state.objective:
        # inner-solver tolerance must never make the iterate worse
        cov_new, obj_new = state.cov, state.objective
        rejected_cov += 1
    else:
        cov_new = replace(cov_new, rc_alloc=alloc)

    theta = state.theta
    rejected = state.rejected_phases
    if ctx.scheme.ris:
        try:
            theta_cand, _ = _phase_step(ctx, cov_new, theta)
        except RisRegionError as exc:
            raise SolverError(f"RIS block failed: {exc}", iteration=t) from exc
        obj_cand, _, alloc_cand = evaluate(ctx.model, cov_new, theta_cand, ctx.alpha, use_common)
        if obj_cand >= obj_new:
            theta, obj_new = theta_cand, obj_cand
            cov_new = replace(cov_new, rc_alloc=alloc_cand)
        else:
            rejected += 1
    return AoState(t, cov_new, theta, obj_new, state.trace + [obj_new], rejected, rejected_cov, ctx.alpha)


def run_ao(scene, profile, scheme, alpha, init=None, stop=StopRule(), epsilon=DEFAULT_EPSILON):
    """Iterate :func:`ao_iterate` until the relative objective improvement
    stays below ``stop.rel_tol`` for ``stop.patience`` consecutive
    iterations or ``stop.max_iter`` is reached.

    Returns ``(final AoState, RegionPoint)``; reported rates are exact.
    """
    ctx = _Context(scene, profile, scheme, alpha, epsilon)
    K = scene.n_users
    if scene.P_total == 0:
        state = initial_state(scene, ctx.scheme, ctx.alpha)
        state.objective = 0.0
        state.trace = [0.0]
        point = RegionPoint(ctx.alpha, np.zeros(K), ctx.scheme.label, True, 0, 0.0, [0.0], "converged",
                            state.theta.theta)
        return state, point

    state = init if init is not None else initial_state(scene, ctx.scheme, ctx.alpha)
    obj0, _, alloc0 = evaluate(ctx.model, state.cov, state.theta, ctx.alpha, ctx.scheme.uses_common)
    state = AoState(0, replace(state.cov, rc_alloc=alloc0), state.theta, obj0, [obj0], alpha=ctx.alpha)

    quiet = 0
    converged = False
    while state.iteration < stop.max_iter:
        prev = state.objective
        state = _iterate(state, ctx)
        rel = (state.objective - prev) / max(abs(prev), 1e-12)
        quiet = quiet + 1 if rel < stop.rel_tol else 0
        if quiet >= stop.patience:
            converged = True
            break

    obj, rates, _ = evaluate(ctx.model, state.cov, state.theta, ctx.alpha, ctx.scheme.uses_common)
    point = RegionPoint(
        ctx.alpha.copy(), rates, ctx.scheme.label, converged, state.iteration, obj, list(state.trace),
        "converged" if converged else "max_iter", state.theta.theta.copy(),
    )
    return state, point
