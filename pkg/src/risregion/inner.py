"""Convex surrogate problems of the two alternating blocks.

Both are solved in epigraph form (maximize ``r``) with the barrier method
in :mod:`risregion.barrier`.  The ``min_k`` on the common rate is written
as one constraint per user.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import barrier
from .errors import SolverError, ValidationError
from .rates import LOG2E_HALF, CovarianceSet, SignalingStructure, covariance_basis
from .wlmodel import RisPhases

GAP_TOL = 1e-8
MAX_NEWTON = 300


@dataclass(frozen=True)
class SolveReport:
    objective: float
    iterations: int
    residual: float
    gap: float
    status: str  # "converged" | "max_iter" | "infeasible"
    common_active: bool = True


def _check_alpha(alpha, K):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (K,) or np.any(alpha < 0) or abs(alpha.sum() - 1.0) > 1e-9:
        raise ValidationError(f"weights must be nonnegative, length {K} and sum to one")
    return alpha


class _CovarianceProblem:
    """Variable layout: ``[P_c coords | P_1 coords | ... | P_K coords | rc | r]``;
    ``P_c`` and ``rc`` are absent when the common message is off."""

    def __init__(self, private, common, P_total, basis, alpha, use_common):
        self.common = list(common) if use_common else []
        self.use_common = use_common
        self.alpha = alpha
        self.basis = basis
        K = len(private)
        d = basis.shape[0]
        self.K, self.d = K, d
        self.n_blocks = nb = K + (1 if use_common else 0)
        off = nb * d
        self.rc_idx = np.arange(off, off + K) if use_common else np.arange(0)
        self.r_idx = off + (K if use_common else 0)
        self.n = n = self.r_idx + 1
        # block position of each private message; the common one is block 0
        self.priv_block = np.arange(K) + (1 if use_common else 0)
        basis_L = lambda L: np.einsum("ij,aij->a", L, basis)

        sel, lin, Hs, Cns, consts = [], [], [], [], []
        self.n_rate = 0
        for k, s in enumerate(private):
            if alpha[k] <= 0:
                continue
            w = np.zeros(nb)
            w[self.priv_block] = 1.0
            lvec = np.zeros(n)
            for j in s.linear_users:
                b = self.priv_block[j]
                lvec[b * d:(b + 1) * d] -= basis_L(s.L)
            if use_common:
                lvec[self.rc_idx[k]] += 1.0
            lvec[self.r_idx] -= alpha[k]
            sel.append(w), lin.append(lvec), Hs.append(s.H), Cns.append(s.Cn), consts.append(s.const)
            self.n_rate += 1
        for s in self.common:
            w = np.ones(nb)
            lvec = np.zeros(n)
            for j in s.linear_users:
                b = self.priv_block[j]
                lvec[b * d:(b + 1) * d] -= basis_L(s.L)
            lvec[self.rc_idx] -= 1.0
            sel.append(w), lin.append(lvec), Hs.append(s.H), Cns.append(s.Cn), consts.append(s.const)
        self.sel = np.array(sel)
        self.lin = np.array(lin)
        self.Hs = np.array(Hs)
        self.Cns = np.array(Cns)
        self.consts = np.array(consts)
        # H_i E_a H_i^T for every constraint and basis element
        self.HEH = np.einsum("mij,ajk,mlk->mail", self.Hs, basis, self.Hs)

        trace_vec = np.einsum("aii->a", basis)
        rows = [np.concatenate([np.tile(-trace_vec, nb), np.zeros(n - off)])]
        rhs = [-P_total]
        for i in self.rc_idx:
            row = np.zeros(n)
            row[i] = 1.0
            rows.append(row)
            rhs.append(0.0)
        self.A = np.array(rows)
        self.b = np.array(rhs)
        self.c = np.zeros(n)
        self.c[self.r_idx] = 1.0
        self.blocks = barrier.PsdBlocks(0, nb, basis)

    def coords_of(self, x):
        return x[: self.n_blocks * self.d].reshape(self.n_blocks, self.d)

    def block(self, x, i):
        return np.tensordot(self.coords_of(x)[i], self.basis, axes=1)

    def oracle(self, x, derivatives):
        # coordinates summed per constraint, then mapped through H E H^T
        z = self.sel @ self.coords_of(x)  # (m, d)
        M = self.Cns + np.einsum("ma,mail->mil", z, self.HEH)
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            if derivatives:
                raise
            return np.full(len(self.consts), -np.inf)
        logdet = np.log(np.diagonal(L, axis1=1, axis2=2)).sum(axis=1) / np.log(2.0)
        g = logdet + self.consts + self.lin @ x
        if not derivatives:
            return g
        Minv = np.linalg.inv(M)
        Minv = 0.5 * (Minv + np.swapaxes(Minv, 1, 2))
        ME = np.einsum("mij,majk->maik", Minv, self.HEH)  # M^-1 H E_a H^T
        gk = LOG2E_HALF * np.einsum("maii->ma", ME)
        B = LOG2E_HALF * np.einsum("maij,mbji->mab", ME, ME)
        d, nb = self.d, self.n_blocks
        G = self.lin.copy()
        G[:, : nb * d] += np.einsum("mj,ma->mja", self.sel, gk).reshape(len(g), nb * d)

        def combo(w):
            H = np.zeros((self.n, self.n))
            blk = np.einsum("m,mj,ml,mab->jalb", w, self.sel, self.sel, B).reshape(nb * d, nb * d)
            H[: nb * d, : nb * d] = -blk
            return H

        return g, G, combo

    def problem(self):
        return barrier.BarrierProblem(self.c, self.A, self.b, self.oracle, self.blocks)

    def coords(self, P):
        return np.einsum("ij,aij->a", P, self.basis)

    def start(self, cov_prev, P_total, shrink=1e-3):
        x = np.zeros(self.n)
        nb, d = self.n_blocks, self.d
        p = self.basis.shape[1]
        white = 0.5 * P_total / (nb * p) * np.eye(p)
        mats = ([cov_prev.P_c] if self.use_common else []) + list(cov_prev.P)
        for i, P in enumerate(mats):
            x[i * d:(i + 1) * d] = self.coords((1 - shrink) * P + shrink * white)
        # scale down if the previous point sits on the budget
        used = -(self.A[0] @ x)
        if used >= P_total:
            x[: nb * d] *= (1 - shrink) * P_total / used
        g = self.oracle(x, False)
        if self.use_common:
            common_vals = g[self.n_rate:]
            x[self.rc_idx] = max(common_vals.min(), 0.0) / (2 * self.K)
            g = self.oracle(x, False)
        # shift r so every rate constraint has slack
        act = self.alpha[self.alpha > 0]
        x[self.r_idx] = np.min((g[: self.n_rate] + act * x[self.r_idx]) / act) - 1.0
        return x

    def unpack(self, x):
        K = self.K
        p = self.basis.shape[1]
        mats = np.tensordot(self.coords_of(x), self.basis, axes=1)
        mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
        P = mats[self.priv_block]
        P_c = mats[0] if self.use_common else np.zeros((p, p))
        rc = np.clip(x[self.rc_idx], 0.0, None) if self.use_common else np.zeros(K)
        return CovarianceSet(P_c, P, rc)


def _residual(problem, x):
    s = problem.A @ x - problem.b
    g = problem.oracle(x, False) if problem.oracle is not None else np.zeros(0)
    vals = np.concatenate([s, g])
    return float(max(0.0, -vals.min())) if vals.size else 0.0


def _run(problem, x0):
    x_int = barrier.find_interior(problem, x0)
    if x_int is None:
        return None
    res = barrier.solve(problem, x_int, gap_tol=GAP_TOL, t0=1e3, mu=50.0, max_newton=MAX_NEWTON)
    return res


def solve_covariance_surrogate(private, common, P_total, signaling, alpha, cov_prev, use_common=True):
    """Solve the covariance surrogate problem.

    ``private``/``common`` are lists of :class:`CovarianceSurrogate` built at
    ``cov_prev``; ``use_common=False`` pins the common message to zero (TIN).
    Returns ``(CovarianceSet, SolveReport)``.
    """
    K = len(private)
    alpha = _check_alpha(alpha, K)
    signaling = SignalingStructure(signaling)
    n_bs = cov_prev.P.shape[1] // 2
    basis = covariance_basis(n_bs, signaling)
    attempts = [True, False] if (use_common and common) else [False]
    for flag in attempts:
        prob = _CovarianceProblem(private, common, P_total, basis, alpha, flag)
        x0 = prob.start(cov_prev, P_total)
        bp = prob.problem()
        res = _run(bp, x0)
        if res is None:
            continue
        cov = prob.unpack(res.x)
        status = "converged" if res.converged else "max_iter"
        report = SolveReport(res.objective, res.newton_steps, _residual(bp, res.x), res.gap, status, flag)
        return cov, report
    raise SolverError("covariance surrogate problem has no strictly feasible point")


class _PhaseProblem:
    """Variable layout ``[Re theta | Im theta | rc | r]``."""

    def __init__(self, private, common, constraints, alpha, use_common):
        N = constraints.theta_prev.size
        K = len(private)
        self.N, self.K = N, K
        self.use_common = use_common
        self.rc_idx = np.arange(2 * N, 2 * N + K) if use_common else np.arange(0)
        self.r_idx = 2 * N + (K if use_common else 0)
        self.n = n = self.r_idx + 1
        c0, G, Q = [], [], []

        def embed(s):
            g = np.zeros(n)
            q = np.zeros((n, n))
            g[: 2 * N] = s.grad
            q[: 2 * N, : 2 * N] = s.hess
            return s.const, g, q

        self.n_rate = 0
        for k, s in enumerate(private):
            if alpha[k] <= 0:
                continue
            a, g, q = embed(s)
            if use_common:
                g[self.rc_idx[k]] += 1.0
            g[self.r_idx] -= alpha[k]
            c0.append(a), G.append(g), Q.append(q)
            self.n_rate += 1
        if use_common:
            for s in common:
                a, g, q = embed(s)
                g[self.rc_idx] -= 1.0
                c0.append(a), G.append(g), Q.append(q)
        for i in range(N):
            q = np.zeros((n, n))
            q[i, i] = q[N + i, N + i] = -2.0
            c0.append(1.0), G.append(np.zeros(n)), Q.append(q)
        self.c0, self.G, self.Q = np.array(c0), np.array(G), np.array(Q)

        A_lin, b_lin = constraints.real_form()
        rows = [np.hstack([A_lin, np.zeros((N, n - 2 * N))])]
        rhs = [b_lin]
        for i in self.rc_idx:
            row = np.zeros((1, n))
            row[0, i] = 1.0
            rows.append(row)
            rhs.append([0.0])
        self.A = np.vstack(rows)
        self.b = np.concatenate(rhs)
        self.c = np.zeros(n)
        self.c[self.r_idx] = 1.0
        self.alpha = alpha

    def oracle(self, x, derivatives):
        Qx = self.Q @ x
        g = self.c0 + self.G @ x + 0.5 * Qx @ x
        if not derivatives:
            return g
        return g, self.G + Qx, lambda w: np.tensordot(w, self.Q, axes=1)

    def problem(self):
        return barrier.BarrierProblem(self.c, self.A, self.b, self.oracle, None)

    def start(self, theta_prev, epsilon):
        N = self.N
        x = np.zeros(self.n)
        th = (1 - epsilon / 4) * theta_prev
        x[:N], x[N : 2 * N] = th.real, th.imag
        if self.use_common:
            common_vals = self.oracle(x, False)[self.n_rate : self.n_rate + self.K]
            x[self.rc_idx] = max(common_vals.min(), 0.0) / (2 * self.K)
        g = self.oracle(x, False)[: self.n_rate]
        act = self.alpha[self.alpha > 0]
        x[self.r_idx] = np.min(g / act) - 1.0
        return x


def solve_ris_surrogate(private, common, constraints, alpha, use_common=True):
    """Solve the RIS-phase surrogate problem.

    ``private``/``common`` are lists of :class:`PhaseSurrogate`;
    ``constraints`` is the :class:`LinearizedModulus` at the previous phases.
    Returns the raw (not yet normalized) phases and a :class:`SolveReport`.
    """
    K = len(private)
    alpha = _check_alpha(alpha, K)
    theta_prev = constraints.theta_prev
    if not any(s.depends_on_phases for s in list(private) + list(common)):
        # objective is flat in theta: keep the previous phases
        return RisPhases(theta_prev.copy()), SolveReport(np.nan, 0, 0.0, 0.0, "converged", use_common)
    attempts = [True, False] if (use_common and common) else [False]
    for flag in attempts:
        prob = _PhaseProblem(private, common, constraints, alpha, flag)
        x0 = prob.start(theta_prev, constraints.epsilon)
        bp = prob.problem()
        res = _run(bp, x0)
        if res is None:
            continue
        N = prob.N
        theta_hat = res.x[:N] + 1j * res.x[N : 2 * N]
        status = "converged" if res.converged else "max_iter"
        report = SolveReport(res.objective, res.newton_steps, _residual(bp, res.x), res.gap, status, flag)
        return RisPhases(theta_hat), report
    raise SolverError("RIS surrogate problem has no strictly feasible point")


def normalize_phases(theta_hat, theta_prev=None, tiny=1e-12):
    """Project raw phases onto the unit circle; zero entries fall back to
    ``theta_prev`` (or to 1 when no previous phases are given)."""
    th = theta_hat.theta if isinstance(theta_hat, RisPhases) else np.asarray(theta_hat, dtype=complex)
    th = np.atleast_1d(th).astype(complex)
    mag = np.abs(th)
    out = np.empty_like(th)
    ok = mag > tiny
    out[ok] = th[ok] / mag[ok]
    if theta_prev is None:
        fallback = np.ones_like(th)
    else:
        fallback = theta_prev.theta if isinstance(theta_prev, RisPhases) else np.asarray(theta_prev, dtype=complex)
    out[~ok] = fallback[~ok]
    return RisPhases(out)
