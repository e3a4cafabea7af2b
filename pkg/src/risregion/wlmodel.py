"""Widely-linear transceiver model with I/Q imbalance.

Every complex quantity is carried to the real domain by stacking
``[Re; Im]``.  A complex map ``z -> A z + B z*`` becomes the real matrix
``real_widely_linear(A, B)`` acting on ``[Re z; Im z]``.

I/Q imbalance is modelled per antenna.  For a branch with amplitude
mismatch ``a`` and phase mismatch ``phi`` the transmitter applies
``x -> V1 x + V2 x*`` and each receiver applies ``y -> G1 y + G2 y*`` with::

    V1 = (1 + a exp(+j phi)) / 2        V2 = (1 - a exp(-j phi)) / 2
    G1 = (1 + a exp(-j phi)) / 2        G2 = (1 - a exp(+j phi)) / 2

A perfect device (``a = 1``, ``phi = 0``) gives ``V1 = G1 = 1`` and
``V2 = G2 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ValidationError

#: Largest admissible phase mismatch.  At 90 degrees the receive
#: transform becomes singular and the effective noise degenerates.
MAX_PHASE = np.deg2rad(89.0)


def real_linear(A):
    """Real image of ``z -> A z`` under ``[Re; Im]`` stacking."""
    A = np.asarray(A)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def real_conjugate(B):
    """Real image of ``z -> B conj(z)``."""
    B = np.asarray(B)
    return np.block([[B.real, B.imag], [B.imag, -B.real]])


def real_widely_linear(A, B):
    """Real image of the widely-linear map ``z -> A z + B conj(z)``."""
    return real_linear(A) + real_conjugate(B)


def stack_real(z):
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=0)


def unstack_real(v):
    v = np.asarray(v)
    n = v.shape[0] // 2
    return v[:n] + 1j * v[n:]


@dataclass(frozen=True)
class IqiProfile:
    """Per-antenna amplitude/phase imbalance of the BS and of every user.

    ``tx_amplitude``/``tx_phase`` have shape ``(N_BS,)``;
    ``rx_amplitude``/``rx_phase`` have shape ``(K, N_u)``.  Phases are in
    radians.
    """

    tx_amplitude: np.ndarray
    tx_phase: np.ndarray
    rx_amplitude: np.ndarray
    rx_phase: np.ndarray

    def __post_init__(self):
        for name in ("tx_amplitude", "tx_phase"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        for name in ("rx_amplitude", "rx_phase"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        if self.tx_amplitude.shape != self.tx_phase.shape:
            raise ConfigurationError("tx amplitude/phase shapes differ")
        if self.rx_amplitude.shape != self.rx_phase.shape:
            raise ConfigurationError("rx amplitude/phase shapes differ")
        if np.any(self.tx_amplitude <= 0) or np.any(self.rx_amplitude <= 0):
            raise ValidationError("IQI amplitudes must be strictly positive")
        if np.any(np.abs(self.tx_phase) > MAX_PHASE) or np.any(np.abs(self.rx_phase) > MAX_PHASE):
            raise ValidationError("IQI phase mismatch must stay below 89 degrees in magnitude")

    @classmethod
    def perfect(cls, K, n_bs, n_u):
        return cls(np.ones(n_bs), np.zeros(n_bs), np.ones((K, n_u)), np.zeros((K, n_u)))

    @classmethod
    def uniform(cls, K, n_bs, n_u, tx_amplitude=1.0, tx_phase_deg=0.0, rx_amplitude=1.0, rx_phase_deg=0.0):
        """Same imbalance on every antenna (the symmetric scenario)."""
        return cls(
            np.full(n_bs, float(tx_amplitude)),
            np.full(n_bs, np.deg2rad(tx_phase_deg)),
            np.full((K, n_u), float(rx_amplitude)),
            np.full((K, n_u), np.deg2rad(rx_phase_deg)),
        )

    @property
    def n_users(self):
        return self.rx_amplitude.shape[0]

    @property
    def is_perfect(self):
        return (
            np.all(self.tx_amplitude == 1.0)
            and np.all(self.tx_phase == 0.0)
            and np.all(self.rx_amplitude == 1.0)
            and np.all(self.rx_phase == 0.0)
        )


@dataclass(frozen=True)
class ComplexScene:
    """Complex baseband channels of the RIS-assisted broadcast channel.

    ``F``: ``(K, N_u, N_BS)`` direct links; ``G``: ``(K, N_u, N_RIS)``
    RIS-to-user links; ``G0``: ``(N_RIS, N_BS)`` BS-to-RIS link.  ``N_RIS``
    may be zero.
    """

    F: np.ndarray
    G: np.ndarray
    G0: np.ndarray
    sigma2: float
    P_total: float

    def __post_init__(self):
        F = np.asarray(self.F, dtype=complex)
        if F.ndim != 3:
            raise ConfigurationError(f"F must have shape (K, N_u, N_BS), got {F.shape}")
        K, n_u, n_bs = F.shape
        G = np.asarray(self.G, dtype=complex)
        G0 = np.asarray(self.G0, dtype=complex)
        if G.size == 0 and G0.size == 0:
            G = np.zeros((K, n_u, 0), dtype=complex)
            G0 = np.zeros((0, n_bs), dtype=complex)
        if G.ndim != 3 or G.shape[:2] != (K, n_u):
            raise ConfigurationError(f"G must have shape (K, N_u, N_RIS) = ({K}, {n_u}, .), got {G.shape}")
        if G0.ndim != 2 or G0.shape != (G.shape[2], n_bs):
            raise ConfigurationError(f"G0 must have shape ({G.shape[2]}, {n_bs}), got {G0.shape}")
        if not self.sigma2 > 0:
            raise ValidationError("noise power must be positive")
        if self.P_total < 0:
            raise ValidationError("power budget must be nonnegative")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "G0", G0)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "P_total", float(self.P_total))

    @property
    def dims(self):
        """``(K, N_BS, N_u, N_RIS)``."""
        K, n_u, n_bs = self.F.shape
        return K, n_bs, n_u, self.G0.shape[0]

    @property
    def n_users(self):
        return self.F.shape[0]

    @property
    def n_ris(self):
        return self.G0.shape[0]

    def without_ris(self):
        K, n_bs, n_u, _ = self.dims
        return ComplexScene(self.F, np.zeros((K, n_u, 0)), np.zeros((0, n_bs)), self.sigma2, self.P_total)

    def with_power(self, P_total):
        return ComplexScene(self.F, self.G, self.G0, self.sigma2, P_total)


@dataclass(frozen=True)
class RisPhases:
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=complex)))

    @classmethod
    def identity(cls, n):
        return cls(np.ones(n, dtype=complex))

    def is_feasible(self, tol=1e-12):
        return bool(np.all(np.abs(np.abs(self.theta) - 1.0) <= tol))

    def __len__(self):
        return self.theta.size


@dataclass(frozen=True)
class RealLink:
    """Real-decomposed effective channels ``(K, 2N_u, 2N_BS)`` and noise
    covariances ``(K, 2N_u, 2N_u)``."""

    H_real: np.ndarray
    Cn_real: np.ndarray

    @property
    def n_users(self):
        return self.H_real.shape[0]


def compose_effective_channel(scene, theta, k):
    """``G_k diag(theta) G0 + F_k`` for user ``k``."""
    theta = theta.theta if isinstance(theta, RisPhases) else np.atleast_1d(np.asarray(theta, dtype=complex))
    if theta.shape != (scene.n_ris,):
        raise ConfigurationError(f"expected {scene.n_ris} RIS phases, got {theta.shape}")
    if not 0 <= k < scene.n_users:
        raise ConfigurationError(f"user index {k} out of range")
    return (scene.G[k] * theta) @ scene.G0 + scene.F[k]


def _tx_coefficients(amplitude, phase):
    v1 = 0.5 * (1.0 + amplitude * np.exp(1j * phase))
    v2 = 0.5 * (1.0 - amplitude * np.exp(-1j * phase))
    return v1, v2


def _rx_coefficients(amplitude, phase):
    g1 = 0.5 * (1.0 + amplitude * np.exp(-1j * phase))
    g2 = 0.5 * (1.0 - amplitude * np.exp(1j * phase))
    return g1, g2


def build_iqi_matrices(profile):
    """Return ``(V1, V2, Gamma1, Gamma2)``; the last two are lists over users."""
    if not isinstance(profile, IqiProfile):
        raise ValidationError("expected an IqiProfile")
    v1, v2 = _tx_coefficients(profile.tx_amplitude, profile.tx_phase)
    gamma1, gamma2 = [], []
    for amp, ph in zip(profile.rx_amplitude, profile.rx_phase):
        g1, g2 = _rx_coefficients(amp, ph)
        gamma1.append(np.diag(g1))
        gamma2.append(np.diag(g2))
    return np.diag(v1), np.diag(v2), gamma1, gamma2


def real_decompose(H, V1, V2, Gamma1, Gamma2, sigma2):
    """Real effective channel and noise covariance of one user.

    Returns ``(H_real, Cn_real)`` with ``H_real = T_rx R(H) T_tx`` where
    ``T_tx``/``T_rx`` are the real images of the transmit/receive
    widely-linear transforms, and ``Cn_real = (sigma2 / 2) T_rx T_rx^T``.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    n_u, n_bs = H.shape
    if V1.shape != (n_bs, n_bs) or V2.shape != (n_bs, n_bs):
        raise ConfigurationError("transmit IQI matrices do not match the channel width")
    if Gamma1.shape != (n_u, n_u) or Gamma2.shape != (n_u, n_u):
        raise ConfigurationError("receive IQI matrices do not match the channel height")
    t_tx = real_widely_linear(V1, V2)
    t_rx = real_widely_linear(Gamma1, Gamma2)
    H_real = t_rx @ real_linear(H) @ t_tx
    Cn = 0.5 * sigma2 * (t_rx @ t_rx.T)
    return H_real, 0.5 * (Cn + Cn.T)


class LinkModel:
    """Precomputed real-domain channel model of a scene under a profile.

    ``H_real(theta)`` is affine in ``x = [Re theta; Im theta]``:
    ``H_real_k(theta) = base[k] + sum_m x_m * slopes[k, m]``.
    """

    def __init__(self, scene, profile):
        K, n_bs, n_u, n_ris = scene.dims
        if profile.n_users != K or profile.tx_amplitude.shape != (n_bs,) or profile.rx_amplitude.shape[1] != n_u:
            raise ConfigurationError("IQI profile dimensions do not match the scene")
        self.scene = scene
        self.profile = profile
        V1, V2, Gam1, Gam2 = build_iqi_matrices(profile)
        self.t_tx = real_widely_linear(V1, V2)
        self.t_rx = [real_widely_linear(g1, g2) for g1, g2 in zip(Gam1, Gam2)]
        self.Cn = np.array([0.5 * scene.sigma2 * (t @ t.T) for t in self.t_rx])
        self.Cn = 0.5 * (self.Cn + np.transpose(self.Cn, (0, 2, 1)))
        self.base = np.array([self._real(k, scene.F[k]) for k in range(K)])
        slopes = np.zeros((K, 2 * n_ris, 2 * n_u, 2 * n_bs))
        for k in range(K):
            for n in range(n_ris):
                outer = np.outer(scene.G[k][:, n], scene.G0[n])
                slopes[k, n] = self._real(k, outer)
                slopes[k, n_ris + n] = self._real(k, 1j * outer)
        self.slopes = slopes

    def _real(self, k, H):
        return self.t_rx[k] @ real_linear(H) @ self.t_tx

    @property
    def n_users(self):
        return self.base.shape[0]

    @property
    def n_ris(self):
        return self.scene.n_ris

    def channels(self, theta):
        """Real effective channels ``(K, 2N_u, 2N_BS)`` at ``theta``."""
        theta = theta.theta if isinstance(theta, RisPhases) else np.asarray(theta, dtype=complex)
        if self.n_ris == 0:
            return self.base.copy()
        x = np.concatenate([theta.real, theta.imag])
        return self.base + np.einsum("m,kmij->kij", x, self.slopes)

    def links(self, theta):
        return RealLink(self.channels(theta), self.Cn.copy())


def real_links(scene, profile, theta=None):
    """Convenience wrapper returning the :class:`RealLink` at ``theta``."""
    if theta is None:
        theta = RisPhases.identity(scene.n_ris)
    return LinkModel(scene, profile).links(theta)
