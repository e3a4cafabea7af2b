"""Rate-region boundaries: weight sweeps per scheme and the TDMA baseline."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .ao import RegionPoint, StopRule, initial_state, lift_state, run_ao
from .rates import SignalingStructure
from .errors import RisRegionError, ValidationError
from .schemes import SchemeConfig, parse_scheme
from .surrogate import DEFAULT_EPSILON

__all__ = [
    "SchemeConfig",
    "alpha_grid",
    "parents",
    "sweep_region",
    "sweep_schemes",
    "tdma_timesharing",
    "ts_objective",
    "ts_boundary",
    "point_objective",
]

TS_GRID = 101
IMPROPER_TILT = 0.5
FOCUS_SHARES = (0.3, 0.02)


def alpha_grid(n_alpha, K=2):
    """Weights ``(a, 1 - a)`` for ``a`` evenly spaced on ``[0, 1]``."""
    if n_alpha < 2:
        raise ValidationError("n_alpha must be at least 2")
    if K != 2:
        raise ValidationError("weight sweeps are implemented for K = 2")
    a = np.linspace(0.0, 1.0, n_alpha)
    return np.stack([a, 1.0 - a], axis=1)


def parents(scheme):
    """Schemes whose optimum is a feasible point of ``scheme``.

    Used to seed the local search so that nesting holds in practice and
    not only in theory.
    """
    s = parse_scheme(scheme)
    if s.is_tdma:
        return []
    base = s.label[:-3] if s.ris else s.label
    below = {"PT": [], "IT": ["PT"], "PR": ["PT"], "IR": ["PR", "IT"]}[base]
    if s.ris:
        # the RIS-free optimum with unit phases; sub-schemes with a RIS are
        # skipped because each RIS point costs far more than a plain one
        return [base]
    return below


def point_objective(point):
    """``min_k r_k / alpha_k`` of a region point over positive weights."""
    a = np.asarray(point.alpha)
    r = np.asarray(point.rates)
    m = a > 0
    return float(np.min(r[m] / a[m]))


def _failed(alpha, scheme, exc):
    K = len(alpha)
    return RegionPoint(np.asarray(alpha, float), np.zeros(K), scheme, False, getattr(exc, "iteration", 0) or 0,
                       0.0, [], f"failed: {exc}", None)


def _solve_point(scene, profile, scheme, alpha, seeds, stop, epsilon, multistart=True):
    """Best of the default start, a few structured starts and every seed
    state (only the default start when ``multistart`` is false)."""
    scheme = parse_scheme(scheme)
    starts = [None]
    if multistart:
        if not scheme.ris and scheme.signaling == SignalingStructure.IMPROPER:
            starts.append(initial_state(scene, scheme, alpha, tilt=IMPROPER_TILT))
        if not scheme.ris and scheme.uses_common and scheme.signaling == SignalingStructure.PROPER:
            starts += [initial_state(scene, scheme, alpha, focus=k, share=sh)
                       for k in range(scene.n_users) for sh in FOCUS_SHARES]
        starts += [lift_state(st, scene, scheme) for st in seeds or []]
    best_state, best = None, None
    errors = []
    for init in starts:
        try:
            state, point = run_ao(scene, profile, scheme, alpha, init=init, stop=stop, epsilon=epsilon)
        except RisRegionError as exc:
            errors.append(exc)
            continue
        if best is None or point.objective > best.objective:
            best_state, best = state, point
    if best is None:
        return None, _failed(alpha, parse_scheme(scheme).label, errors[0])
    return best_state, best


def _point_task(args):
    return _solve_point(*args)


def sweep_region(scene, profile, scheme, n_alpha=21, seeds=None, stop=StopRule(), epsilon=DEFAULT_EPSILON,
                 workers=1, return_states=False, multistart=True):
    """Run the AO for every weight on the grid.

    Parameters
    ----------
    seeds : list of list of AoState, optional
        ``seeds[i]`` holds extra starting states for the ``i``-th weight,
        typically the final states of sub-schemes at the same weight.
    workers : int
        Process count; points are independent so results do not depend
        on it.
    multistart : bool
        Keep the best of several deterministic starts per point instead of
        the single white start.  The AO is a local method; the extra
        starts make scheme nesting hold in practice.

    Returns
    -------
    list of RegionPoint sorted by ``alpha[0]`` (and the final states when
    ``return_states``).  A point whose solve raised is reported with
    ``status`` starting with ``"failed"`` and the sweep continues.
    """
    scheme = parse_scheme(scheme)
    if scheme.is_tdma:
        points = tdma_timesharing(scene, profile, ris=scheme.ris, stop=stop, epsilon=epsilon)
        return (points, [None] * len(points)) if return_states else points
    alphas = alpha_grid(n_alpha, scene.n_users)
    seeds = seeds if seeds is not None else [[] for _ in alphas]
    tasks = [(scene, profile, scheme, a, sd, stop, epsilon, multistart) for a, sd in zip(alphas, seeds)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_task, tasks))
    else:
        results = [_point_task(t) for t in tasks]
    states = [r[0] for r in results]
    points = [r[1] for r in results]
    return (points, states) if return_states else points


def _order(labels):
    """Sub-schemes first so that their states can seed the larger ones."""
    done, out = set(), []

    def visit(label):
        if label in done:
            return
        for p in parents(label):
            visit(p)
        done.add(label)
        out.append(label)

    for lab in labels:
        visit(parse_scheme(lab).label)
    return out


def sweep_schemes(scene, profile, schemes, n_alpha=21, nested=True, stop=StopRule(), epsilon=DEFAULT_EPSILON,
                  workers=1, multistart=True):
    """Sweep several schemes on a shared weight grid.

    With ``nested`` each point of a scheme is also started from the final
    iterates of its sub-schemes at the same weight (running those
    sub-schemes when they were not requested).  Returns a dict mapping
    each requested label to its points.
    """
    requested = [parse_scheme(s).label for s in schemes]
    nested = nested and multistart
    run_list = _order(requested) if nested else requested
    has_ris = scene.n_ris > 0
    states, points = {}, {}
    for label in run_list:
        sch = parse_scheme(label)
        if sch.ris and not has_ris:
            raise ValidationError(f"scheme {label} needs a scene with a RIS")
        seeds = None
        if nested and not sch.is_tdma:
            seeds = [[states[p][i] for p in parents(label) if states.get(p) and states[p][i] is not None]
                     for i in range(n_alpha)]
        pts, sts = sweep_region(scene, profile, sch, n_alpha, seeds=seeds, stop=stop, epsilon=epsilon,
                                workers=workers, return_states=True, multistart=multistart)
        points[label], states[label] = pts, sts
    return {label: points[label] for label in requested}


def ts_objective(single_user_rates, alpha):
    """Max-min weighted rate reachable by time sharing between the
    single-user points, ``R1 R2 / (a1 R2 + a2 R1)`` for two users."""
    R = np.asarray(single_user_rates, dtype=float)
    a = np.asarray(alpha, dtype=float)
    if np.any(R <= 0):
        return 0.0
    return float(1.0 / np.sum(a / R))


def _single_user_rates(scene, profile, ris, stop, epsilon):
    K = scene.n_users
    label = "IT_IR" if ris else "IT"
    R = np.zeros(K)
    for k in range(K):
        alpha = np.zeros(K)
        alpha[k] = 1.0
        _, point = run_ao(scene, profile, label, alpha, stop=stop, epsilon=epsilon)
        R[k] = point.rates[k]
    return R


def tdma_timesharing(scene, profile, ris=False, n_tau=TS_GRID, stop=StopRule(), epsilon=DEFAULT_EPSILON):
    """Time-sharing segment between the single-user optima.

    Each user's rate is maximized alone with the full budget (improper
    signaling, and the RIS tuned to that user when ``ris``).  Returns
    ``n_tau`` points ``(tau R1, (1 - tau) R2)`` sorted by their weight;
    the weight of a point is its rate vector normalized to sum one.
    """
    if scene.n_users != 2:
        raise ValidationError("time sharing baseline is implemented for K = 2")
    R = _single_user_rates(scene, profile, ris, stop, epsilon)
    label = "TS_IR" if ris else "TS"
    points = []
    for tau in np.linspace(0.0, 1.0, n_tau):
        rates = np.array([tau * R[0], (1.0 - tau) * R[1]])
        total = rates.sum()
        alpha = rates / total if total > 0 else np.array([tau, 1.0 - tau])
        obj = float(total) if total > 0 else 0.0
        points.append(RegionPoint(alpha, rates, label, True, 0, obj, [], "converged", None))
    return points


def ts_boundary(points):
    """Single-user rates ``(R1*, R2*)`` recovered from a TS segment."""
    return np.array([points[-1].rates[0], points[0].rates[1]])
