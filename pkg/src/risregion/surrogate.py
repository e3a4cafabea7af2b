"""Concave minorants used by the majorization-minimization steps.

Covariance block: each rate is a difference of two concave log-dets; the
subtracted one is replaced by its tangent plane at the previous iterate.

Phase block: with covariances fixed, ``log det(I + Y^-1 V V^T)`` is
bounded below by a concave quadratic in the (real-stacked) RIS phases,
tight at the previous phases.

Unit-modulus constraint: ``|theta_n|^2 >= 1`` is replaced by its tangent
inequality relaxed by ``epsilon``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, ValidationError
from .rates import LOG2E_HALF, half_logdet2
from .wlmodel import RisPhases

DEFAULT_EPSILON = 0.01


def psd_sqrt(P):
    """Symmetric square root with negative eigenvalues clipped to zero."""
    w, U = np.linalg.eigh(0.5 * (P + P.T))
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T


def _pd_inverse(M):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError("interference-plus-noise covariance is not positive definite") from exc
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


@dataclass(frozen=True)
class CovarianceSurrogate:
    """``value(cov) = 0.5 log2 det(Cn + H S H^T) + const - sum_j <L, P_j>``.

    ``S`` is the sum of all private covariances, plus ``P_c`` when
    ``with_common``; the linear term runs over ``linear_users``.
    """

    user: int
    kind: str
    H: np.ndarray
    Cn: np.ndarray
    with_common: bool
    linear_users: tuple
    L: np.ndarray
    const: float

    def concave_matrix(self, cov):
        S = cov.P.sum(axis=0)
        if self.with_common:
            S = S + cov.P_c
        return self.Cn + self.H @ S @ self.H.T

    def value(self, cov):
        lin = sum(float(np.sum(self.L * cov.P[j])) for j in self.linear_users)
        return half_logdet2(self.concave_matrix(cov)) + self.const - lin


def _linear_term(H, Cn, S):
    M_inv = _pd_inverse(Cn + H @ S @ H.T)
    L = LOG2E_HALF * (H.T @ M_inv @ H)
    return 0.5 * (L + L.T)


def build_private_cov_bound(links, cov_prev, k):
    """Minorant of ``r_pk`` tight at ``cov_prev``."""
    H, Cn = links.H_real[k], links.Cn_real[k]
    others = tuple(j for j in range(links.n_users) if j != k)
    S_other = sum((cov_prev.P[j] for j in others), np.zeros_like(cov_prev.P_c))
    L = _linear_term(H, Cn, S_other)
    r2 = half_logdet2(Cn + H @ S_other @ H.T)
    const = -r2 + sum(float(np.sum(L * cov_prev.P[j])) for j in others)
    return CovarianceSurrogate(k, "private", H, Cn, False, others, L, const)


def build_common_cov_bound(links, cov_prev, k):
    """Minorant of the common decoding rate at user ``k``, tight at ``cov_prev``."""
    H, Cn = links.H_real[k], links.Cn_real[k]
    everyone = tuple(range(links.n_users))
    S_all = cov_prev.P.sum(axis=0)
    L = _linear_term(H, Cn, S_all)
    r2 = half_logdet2(Cn + H @ S_all @ H.T)
    const = -r2 + sum(float(np.sum(L * cov_prev.P[j])) for j in everyone)
    return CovarianceSurrogate(k, "common", H, Cn, True, everyone, L, const)


@dataclass(frozen=True)
class PhaseSurrogate:
    """Concave quadratic minorant in ``x = [Re theta; Im theta]``:
    ``value = const + grad @ x + 0.5 x @ hess @ x``."""

    user: int
    kind: str
    const: float
    grad: np.ndarray
    hess: np.ndarray
    theta_prev: np.ndarray
    V_bar: np.ndarray
    Y_bar: np.ndarray

    def value(self, theta):
        theta = theta.theta if isinstance(theta, RisPhases) else np.asarray(theta, dtype=complex)
        x = np.concatenate([theta.real, theta.imag])
        return float(self.const + self.grad @ x + 0.5 * x @ self.hess @ x)

    @property
    def depends_on_phases(self):
        return bool(np.any(self.grad != 0) or np.any(self.hess != 0))


def _phase_bound(model, k, theta_prev, signal, interference, kind):
    """Build the minorant of ``0.5 log2 det(I + Y^-1 V V^T)`` where
    ``V = H(theta) signal^(1/2)`` and ``Y = Cn + H(theta) interference H(theta)^T``."""
    theta_prev = theta_prev.theta if isinstance(theta_prev, RisPhases) else np.asarray(theta_prev, dtype=complex)
    c = LOG2E_HALF
    H_bar = model.channels(theta_prev)[k]
    Cn = model.Cn[k]
    root = psd_sqrt(signal)
    V_bar = H_bar @ root
    Y_bar = Cn + H_bar @ interference @ H_bar.T
    Y_inv = _pd_inverse(Y_bar)
    VV = V_bar @ V_bar.T
    A = Y_inv - _pd_inverse(VV + Y_bar)
    A = 0.5 * (A + A.T)
    r_prev = half_logdet2(VV + Y_bar) - half_logdet2(Y_bar)
    W = Y_inv @ V_bar @ root  # linear term is <W, H(theta)>
    Q = signal + interference
    H0 = model.base[k]
    D = model.slopes[k]

    const = (
        r_prev
        - c * float(np.sum(VV * Y_inv))
        - c * float(np.sum(A * Cn))
        - c * float(np.sum(A * (H0 @ Q @ H0.T)))
        + 2 * c * float(np.sum(W * H0))
    )
    if D.shape[0]:
        AD = np.einsum("ij,mjl->mil", A, D)  # A D_m
        grad = -2 * c * np.einsum("mil,lp,ip->m", AD, Q, H0) + 2 * c * np.einsum("ij,mij->m", W, D)
        DQ = np.einsum("mil,lp->mip", D, Q)  # D_l Q
        # Tr(A D_m Q D_l^T) = sum_ij (A D_m)_ij (D_l Q)_ij
        hess = -2 * c * np.einsum("mij,lij->ml", AD, DQ)
        hess = 0.5 * (hess + hess.T)
    else:
        grad = np.zeros(0)
        hess = np.zeros((0, 0))
    return PhaseSurrogate(k, kind, const, grad, hess, theta_prev.copy(), V_bar, Y_bar)


def build_private_phase_bound(model, cov_fixed, theta_prev, k):
    """Minorant of ``r_pk`` in the RIS phases, tight at ``theta_prev``.

    ``model`` is a :class:`~risregion.wlmodel.LinkModel`; the interference
    excludes the common message, which is cancelled before private decoding.
    """
    interference = cov_fixed.P.sum(axis=0) - cov_fixed.P[k]
    return _phase_bound(model, k, theta_prev, cov_fixed.P[k], interference, "private")


def build_common_phase_bound(model, cov_fixed, theta_prev, k):
    """Minorant of the common decoding rate at user ``k`` in the RIS phases."""
    interference = cov_fixed.P.sum(axis=0)
    return _phase_bound(model, k, theta_prev, cov_fixed.P_c, interference, "common")


@dataclass(frozen=True)
class LinearizedModulus:
    """Affine inner approximation of ``|theta_n|^2 >= 1``:
    ``2 Re(conj(theta_prev_n) theta_n) - |theta_prev_n|^2 >= 1 - epsilon``."""

    theta_prev: np.ndarray
    epsilon: float

    def lhs(self, theta):
        theta = np.asarray(theta, dtype=complex)
        tp = self.theta_prev
        return 2 * np.real(np.conj(tp) * theta) - np.abs(tp) ** 2

    def slack(self, theta):
        return self.lhs(theta) - (1.0 - self.epsilon)

    def satisfied(self, theta):
        return bool(np.all(self.slack(theta) >= 0))

    def real_form(self):
        """``(A, b)`` such that the constraints read ``A @ x - b >= 0``."""
        tp = self.theta_prev
        n = tp.size
        A = np.zeros((n, 2 * n))
        A[np.arange(n), np.arange(n)] = 2 * tp.real
        A[np.arange(n), n + np.arange(n)] = 2 * tp.imag
        b = np.abs(tp) ** 2 + 1.0 - self.epsilon
        return A, b


def linearize_unit_modulus(theta_prev, epsilon=DEFAULT_EPSILON):
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    theta_prev = theta_prev.theta if isinstance(theta_prev, RisPhases) else np.asarray(theta_prev, dtype=complex)
    return LinearizedModulus(np.atleast_1d(theta_prev).copy(), float(epsilon))
