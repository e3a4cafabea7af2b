"""Small dense logarithmic-barrier interior-point method.

Solves::

    maximize    c @ x
    subject to  A @ x - b >= 0              (linear)
                f_i(x) >= 0                 (smooth concave)
                B_j(x) = sum_a x[idx_j[a]] E_j[a]  positive definite

The barrier ``-t c@x - sum log(A x - b) - sum log f_i - sum log det B_j`` is
minimized by damped Newton steps for an increasing sequence of ``t``.  A
strictly feasible start is required; :func:`find_interior` looks for one
when the caller only has a point that satisfies the PSD blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve


@dataclass
class PsdBlocks:
    """``count`` consecutive PSD blocks sharing one basis; block ``j`` uses
    coordinates ``x[offset + j*d : offset + (j+1)*d]``."""

    offset: int
    count: int
    basis: np.ndarray  # (d, p, p) symmetric basis matrices

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def size(self):
        return self.basis.shape[1]

    @property
    def span(self):
        return slice(self.offset, self.offset + self.count * self.dim)

    def matrices(self, x):
        coords = x[self.span].reshape(self.count, self.dim)
        return np.tensordot(coords, self.basis, axes=1)


@dataclass
class BarrierProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    # oracle(x, derivatives) -> g, or (g, G, hess_combo) with
    # hess_combo(w) = sum_i w_i * Hessian(f_i)
    oracle: Optional[Callable] = None
    blocks: Optional[PsdBlocks] = None

    @property
    def n(self):
        return self.c.size

    def barrier_degree(self, n_nonlinear):
        psd = self.blocks.count * self.blocks.size if self.blocks is not None else 0
        return self.A.shape[0] + n_nonlinear + psd


@dataclass
class BarrierResult:
    x: np.ndarray
    objective: float
    gap: float
    newton_steps: int
    converged: bool
    residual: float = 0.0


def _slacks(problem, x):
    """Linear slacks, nonlinear values and block Cholesky factors, or ``None``
    when ``x`` is outside the strict domain."""
    s = problem.A @ x - problem.b
    if s.size and s.min() <= 0:
        return None
    g = problem.oracle(x, False) if problem.oracle is not None else np.zeros(0)
    if g.size and (not np.all(np.isfinite(g)) or g.min() <= 0):
        return None
    chol = None
    if problem.blocks is not None:
        try:
            chol = np.linalg.cholesky(problem.blocks.matrices(x))
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.diagonal(chol, axis1=1, axis2=2) > 0):
            return None
    return s, g, chol


def _phi(problem, x, t, parts):
    s, g, chol = parts
    val = -t * problem.c @ x - np.log(s).sum() - np.log(g).sum()
    if chol is not None:
        val -= 2 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum()
    return val


def _derivatives(problem, x, t, parts):
    s, g, chol = parts
    n = problem.n
    grad = -t * problem.c.copy()
    hess = np.zeros((n, n))
    if s.size:
        As = problem.A / s[:, None]
        grad -= As.sum(axis=0)
        hess += As.T @ As
    if problem.oracle is not None:
        g, G, combo = problem.oracle(x, True)
        if g.size:
            Gs = G / g[:, None]
            grad -= Gs.sum(axis=0)
            hess += Gs.T @ Gs - combo(1.0 / g)
    blk = problem.blocks
    if blk is not None:
        Linv = np.linalg.inv(chol)
        Binv = np.swapaxes(Linv, 1, 2) @ Linv
        BE = np.einsum("cij,ajk->caik", Binv, blk.basis)
        grad[blk.span] -= np.einsum("caii->ca", BE).ravel()
        d = blk.dim
        sub = np.einsum("caij,cbji->cab", BE, BE)
        for j in range(blk.count):
            sl = slice(blk.offset + j * d, blk.offset + (j + 1) * d)
            hess[sl, sl] += sub[j]
    return grad, 0.5 * (hess + hess.T)


def _newton_direction(hess, grad):
    n = hess.shape[0]
    scale = np.sqrt(np.maximum(np.diag(hess), 1e-300))
    Hs = hess / scale[:, None] / scale[None, :]
    gs = grad / scale
    reg = 0.0
    for _ in range(8):
        try:
            cf = cho_factor(Hs + reg * np.eye(n), lower=True, check_finite=False)
            return -cho_solve(cf, gs, check_finite=False) / scale
        except LinAlgError:
            reg = 1e-14 if reg == 0 else reg * 100
    return -np.linalg.lstsq(Hs, gs, rcond=None)[0] / scale


def _center(problem, x, t, parts, max_steps, stop=None, tol=1e-9):
    """Damped Newton on the barrier at fixed ``t``.  Returns
    ``(x, parts, steps, stopped, done)`` where ``done`` is false only when
    the step budget ran out before the Newton decrement became small."""
    steps = 0
    while steps < max_steps:
        grad, hess = _derivatives(problem, x, t, parts)
        dx = _newton_direction(hess, grad)
        lam2 = -grad @ dx
        if not np.isfinite(lam2):
            break
        if lam2 / 2 <= tol:
            break
        phi0 = _phi(problem, x, t, parts)
        step = 1.0
        while True:
            xn = x + step * dx
            pn = _slacks(problem, xn)
            if pn is not None and _phi(problem, xn, t, pn) <= phi0 - 0.01 * step * lam2:
                break
            step *= 0.5
            if step < 1e-14:
                pn = None
                break
        steps += 1
        if pn is None:
            break
        stalled = phi0 - _phi(problem, xn, t, pn) <= 1e-13 * max(1.0, abs(phi0))
        x, parts = xn, pn
        if stalled:
            break
        if stop is not None and stop(x, parts):
            return x, parts, steps, True, True
    else:
        return x, parts, steps, False, False
    return x, parts, steps, False, True


def solve(problem, x0, gap_tol=1e-9, mu=20.0, t0=1.0, max_newton=300, max_stage=50, stop=None):
    """Barrier method from a strictly feasible ``x0``.

    ``gap_tol`` bounds the duality gap ``m / t``, measured relative to
    ``max(1, |c @ x|)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    parts = _slacks(problem, x)
    if parts is None:
        raise ValueError("starting point is not strictly feasible")
    m = problem.barrier_degree(parts[1].size)
    t = t0
    total = 0
    while True:
        x, parts, steps, stopped, done = _center(problem, x, t, parts, min(max_stage, max_newton - total),
                                                 stop=stop)
        total += steps
        if stopped:
            return BarrierResult(x, float(problem.c @ x), m / t, total, True)
        gap = m / t
        if not done:
            # not yet on the central path: keep centering at this t
            if total < max_newton:
                continue
            return BarrierResult(x, float(problem.c @ x), gap, total, False)
        if gap <= gap_tol * max(1.0, abs(problem.c @ x)):
            return BarrierResult(x, float(problem.c @ x), gap, total, True)
        if total >= max_newton:
            return BarrierResult(x, float(problem.c @ x), gap, total, False)
        t *= mu


def find_interior(problem, x0, margin=1e-9, max_newton=200):
    """Phase I: look for ``x`` with every scalar constraint strictly positive.

    ``x0`` must satisfy the PSD blocks.  Returns ``None`` when the best
    achievable worst-case slack is not positive.
    """
    x0 = np.asarray(x0, dtype=float)
    A, b = problem.A, problem.b
    g0 = problem.oracle(x0, False) if problem.oracle is not None else np.zeros(0)
    s0 = A @ x0 - b
    vals = np.concatenate([s0, g0])
    if vals.size == 0 or vals.min() > 0:
        return x0
    n = problem.n
    # variables (x, s): constraints (.) - s >= 0 and cap - s >= 0; maximize s
    # the cap on s and a box around x0 keep the phase-I barrier bounded below
    cap = 1.0
    radius = 1e3 * (1.0 + np.abs(x0))
    eye = np.eye(n)
    A1 = np.vstack([
        np.hstack([A, -np.ones((A.shape[0], 1))]),
        np.concatenate([np.zeros(n), [-1.0]])[None, :],
        np.hstack([eye, np.zeros((n, 1))]),
        np.hstack([-eye, np.zeros((n, 1))]),
    ])
    b1 = np.concatenate([b, [-cap], x0 - radius, -x0 - radius])

    oracle1 = None
    if problem.oracle is not None:
        def oracle1(z, derivatives):
            x, s = z[:n], z[n]
            if not derivatives:
                return problem.oracle(x, False) - s
            g, G, combo = problem.oracle(x, True)
            G1 = np.hstack([G, -np.ones((G.shape[0], 1))])

            def combo1(w):
                H = np.zeros((n + 1, n + 1))
                H[:n, :n] = combo(w)
                return H

            return g - s, G1, combo1

    blocks = problem.blocks
    c1 = np.zeros(n + 1)
    c1[n] = 1.0
    phase1 = BarrierProblem(c1, A1, b1, oracle1, blocks)
    s_start = min(vals.min(), 0.0) - 1.0
    z0 = np.concatenate([x0, [s_start]])

    def stop(z, parts):
        return z[n] > margin

    res = solve(phase1, z0, gap_tol=1e-12, max_newton=max_newton, stop=stop)
    if res.x[n] > margin:
        return res.x[:n]
    return None
