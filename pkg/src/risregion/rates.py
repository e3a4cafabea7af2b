"""Common/private decoding rates of 1-layer rate splitting in the real domain.

All rates are in bits/s/Hz.  Real covariances are ``2N_BS x 2N_BS`` and
every log-det carries the factor 1/2 of real-valued signalling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, ConstraintViolationError, ValidationError

PSD_TOL = 1e-9
BUDGET_TOL = 1e-9
LOG2E_HALF = 0.5 / np.log(2.0)


class SignalingStructure(str, enum.Enum):
    PROPER = "proper"
    IMPROPER = "improper"


def complex_structure(n):
    """``J = [[0, -I], [I, 0]]`` of size ``2n``."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def project_proper(P):
    """Nearest matrix (Frobenius) that commutes with ``J``: ``(P + J P J^T) / 2``."""
    P = np.asarray(P, dtype=float)
    J = complex_structure(P.shape[0] // 2)
    return 0.5 * (P + J @ P @ J.T)


def is_proper(P, rtol=1e-8):
    J = complex_structure(P.shape[0] // 2)
    return np.linalg.norm(J @ P @ J.T - P) <= rtol * max(np.linalg.norm(P), 1e-300)


def covariance_basis(n_bs, signaling):
    """Frobenius-orthonormal basis of the admissible symmetric ``2N_BS`` matrices.

    Improper signalling spans all symmetric matrices; proper signalling
    spans the real images ``[[A, -B], [B, A]]`` of complex Hermitian
    matrices (``A`` symmetric, ``B`` antisymmetric).
    """
    signaling = SignalingStructure(signaling)
    d = 2 * n_bs
    basis = []
    if signaling is SignalingStructure.IMPROPER:
        for i in range(d):
            for j in range(i, d):
                E = np.zeros((d, d))
                if i == j:
                    E[i, i] = 1.0
                else:
                    E[i, j] = E[j, i] = np.sqrt(0.5)
                basis.append(E)
    else:
        n = n_bs
        for i in range(n):
            for j in range(i, n):
                A = np.zeros((n, n))
                if i == j:
                    A[i, i] = 1.0
                else:
                    A[i, j] = A[j, i] = 1.0
                E = np.block([[A, np.zeros((n, n))], [np.zeros((n, n)), A]])
                basis.append(E / np.linalg.norm(E))
        for i in range(n):
            for j in range(i + 1, n):
                B = np.zeros((n, n))
                B[i, j], B[j, i] = -1.0, 1.0
                E = np.block([[np.zeros((n, n)), -B], [B, np.zeros((n, n))]])
                basis.append(E / np.linalg.norm(E))
    return np.array(basis)


@dataclass(frozen=True)
class CovarianceSet:
    """Real transmit covariances of the common and the K private messages.

    ``P_c``: ``(2N_BS, 2N_BS)``; ``P``: ``(K, 2N_BS, 2N_BS)``;
    ``rc_alloc``: share of the common rate given to each user.
    """

    P_c: np.ndarray
    P: np.ndarray
    rc_alloc: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P_c", np.asarray(self.P_c, dtype=float))
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))
        object.__setattr__(self, "rc_alloc", np.asarray(self.rc_alloc, dtype=float))

    @classmethod
    def white(cls, K, n_bs, power, include_common=True):
        """Uniform white split of ``power`` over the common and private messages."""
        streams = K + 1 if include_common else K
        each = power / streams / (2 * n_bs) * np.eye(2 * n_bs)
        P_c = each.copy() if include_common else np.zeros((2 * n_bs, 2 * n_bs))
        return cls(P_c, np.array([each.copy() for _ in range(K)]), np.zeros(K))

    @property
    def n_users(self):
        return self.P.shape[0]

    @property
    def total_power(self):
        return float(np.trace(self.P_c) + np.trace(self.P, axis1=1, axis2=2).sum())

    def validate(self, P_total=None):
        for name, M in [("P_c", self.P_c)] + [(f"P_{k}", M) for k, M in enumerate(self.P)]:
            if not np.allclose(M, M.T, atol=1e-12, rtol=0):
                raise ValidationError(f"{name} is not symmetric")
            if np.linalg.eigvalsh(M).min() < -PSD_TOL:
                raise ValidationError(f"{name} is not positive semidefinite")
        if P_total is not None and self.total_power > P_total + BUDGET_TOL:
            raise ConstraintViolationError(f"total power {self.total_power} exceeds budget {P_total}")
        if np.any(self.rc_alloc < 0):
            raise ConstraintViolationError("negative common-rate allocation")
        return self


def half_logdet2(M):
    """``0.5 * log2 det(M)`` for a symmetric positive definite ``M`` via Cholesky."""
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("matrix is not positive definite") from exc
    return float(np.log(np.diag(L)).sum() / np.log(2.0))


def _sandwich(H, P):
    return H @ P @ H.T


def private_rate_terms(link, cov, k):
    """``(r_pk1, r_pk2)`` with ``r_pk = r_pk1 - r_pk2``."""
    H, Cn = link.H_real[k], link.Cn_real[k]
    S_all = cov.P.sum(axis=0)
    S_other = S_all - cov.P[k]
    return half_logdet2(Cn + _sandwich(H, S_all)), half_logdet2(Cn + _sandwich(H, S_other))


def common_rate_terms(link, cov, k):
    """``(rbar_ck1, rbar_ck2)`` with ``rbar_ck = rbar_ck1 - rbar_ck2``."""
    H, Cn = link.H_real[k], link.Cn_real[k]
    S_all = cov.P.sum(axis=0)
    return half_logdet2(Cn + _sandwich(H, S_all + cov.P_c)), half_logdet2(Cn + _sandwich(H, S_all))


def common_rate_at_user(link, cov, k):
    r1, r2 = common_rate_terms(link, cov, k)
    return max(r1 - r2, 0.0)


def common_rate(links, cov):
    return min(common_rate_at_user(links, cov, k) for k in range(links.n_users))


def private_rate(link, cov, k):
    r1, r2 = private_rate_terms(link, cov, k)
    return max(r1 - r2, 0.0)


def private_rates(links, cov):
    return np.array([private_rate(links, cov, k) for k in range(links.n_users)])


def user_total_rate(links, cov, k):
    rc = common_rate(links, cov)
    if cov.rc_alloc.sum() > rc + 1e-9:
        raise ConstraintViolationError(
            f"common allocation {cov.rc_alloc.sum():.6g} exceeds decodable common rate {rc:.6g}"
        )
    if np.any(cov.rc_alloc < 0):
        raise ConstraintViolationError("negative common-rate allocation")
    return private_rate(links, cov, k) + float(cov.rc_alloc[k])


def private_rate_gradient(link, cov, k, j):
    """Gradient of ``r_pk`` with respect to the private covariance ``P_j``."""
    H, Cn = link.H_real[k], link.Cn_real[k]
    S_all = cov.P.sum(axis=0)
    M1 = np.linalg.inv(Cn + _sandwich(H, S_all))
    g = H.T @ M1 @ H
    if j != k:
        M2 = np.linalg.inv(Cn + _sandwich(H, S_all - cov.P[k]))
        g = g - H.T @ M2 @ H
    g = LOG2E_HALF * g
    return 0.5 * (g + g.T)


def best_allocation(r_private, r_common, alpha):
    """Max-min weighted objective and the common split achieving it.

    Solves ``max r`` s.t. ``r_private[k] + rc[k] >= alpha[k] r``,
    ``sum(rc) <= r_common``, ``rc >= 0``.  Users with ``alpha[k] = 0``
    carry no constraint and receive no common rate.
    """
    r_private = np.asarray(r_private, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    r_common = max(float(r_common), 0.0)
    active = alpha > 0
    a, p = alpha[active], r_private[active]
    # sum_k max(0, a_k r - p_k) is increasing and piecewise linear in r;
    # walk its breakpoints p_k / a_k in increasing order.
    order = np.argsort(p / a)
    bps = (p / a)[order]
    slope = 0.0
    offset = 0.0  # sum over saturated users of p_k
    r = bps[0]
    for i in range(len(bps)):
        slope += a[order[i]]
        offset += p[order[i]]
        nxt = bps[i + 1] if i + 1 < len(bps) else np.inf
        r_hit = (r_common + offset) / slope
        if r_hit <= nxt:
            r = r_hit
            break
    rc = np.zeros_like(r_private)
    rc[active] = np.maximum(0.0, a * r - p)
    # guard rounding so the split never exceeds the common rate
    total = rc.sum()
    if total > r_common > 0:
        rc *= r_common / total
    elif r_common == 0:
        rc[:] = 0.0
    return float(r), rc


def weighted_objective(r_total, alpha):
    """``min_k r_k / alpha_k`` over users with positive weight."""
    r_total = np.asarray(r_total, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    mask = alpha > 0
    return float(np.min(r_total[mask] / alpha[mask]))
