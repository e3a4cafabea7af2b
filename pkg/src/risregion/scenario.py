"""Scenario construction: fixed benchmark realizations, random fading and
experiment configuration files."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigurationError, ValidationError
from .wlmodel import ComplexScene, IqiProfile

FIXED_NAMES = ("C1", "C2", "C3", "C4", "C5")


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def _load_fixture_file():
    text = resources.files("risregion").joinpath("data/realizations.json").read_text()
    return json.loads(text)


def available_realizations():
    return sorted(_load_fixture_file()["realizations"])


def fixed_direct_channels(name):
    """Direct channels ``F`` of a benchmark realization, shape ``(2, N_u, N_BS)``."""
    table = _load_fixture_file()["realizations"]
    key = name.upper()
    if key not in table:
        raise ConfigurationError(f"unknown realization {name!r}; available: {', '.join(sorted(table))}")
    raw = np.asarray(table[key]["F"], dtype=float)
    return raw[..., 0] + 1j * raw[..., 1]


def load_fixed_realization(name, P_total=10.0, sigma2=1.0):
    """Scene with the printed direct channels and no RIS."""
    F = fixed_direct_channels(name)
    K, n_u, n_bs = F.shape
    return ComplexScene(F, np.zeros((K, n_u, 0)), np.zeros((0, n_bs)), sigma2, P_total)


# ---------------------------------------------------------------- config


@dataclass
class IqiConfig:
    tx_amplitude: float = 1.0
    tx_phase_deg: float = 0.0
    rx_amplitude: float = 1.0
    rx_phase_deg: float = 0.0

    def profile(self, K, n_bs, n_u):
        return IqiProfile.uniform(K, n_bs, n_u, self.tx_amplitude, self.tx_phase_deg,
                                  self.rx_amplitude, self.rx_phase_deg)


#: Imbalance used whenever a run asks for "IQI" without explicit values.
DEFAULT_IQI = IqiConfig(tx_amplitude=0.8, tx_phase_deg=0.0, rx_amplitude=0.8, rx_phase_deg=10.0)


@dataclass
class FadingConfig:
    rician_k: float = 3.0
    alpha_ris: float = 3.2
    alpha_direct: float = 3.0
    reference_distance: float = 1.0


@dataclass
class GeometryConfig:
    """Positions in the plane, in units of the reference distance."""

    bs: list = field(default_factory=lambda: [0.0, 0.0])
    ris: list = field(default_factory=lambda: [4.0, 1.0])
    users: list = field(default_factory=lambda: [[5.0, -2.0], [4.0, -0.5]])


@dataclass
class ScenarioConfig:
    """One experiment.  ``mode`` is ``"fixed"`` (benchmark direct channels
    named by ``realization``) or ``"generative"`` (everything drawn from the
    geometry).  RIS links are always drawn from the geometry and ``seed``."""

    mode: str = "fixed"
    realization: Optional[str] = "C1"
    K: int = 2
    n_bs: int = 1
    n_u: int = 1
    n_ris: int = 0
    power_db: float = 10.0
    sigma2: float = 1.0
    seed: Optional[int] = 1
    iqi: IqiConfig = field(default_factory=IqiConfig)
    fading: FadingConfig = field(default_factory=FadingConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    schemes: list = field(default_factory=lambda: ["PR", "IR"])
    alpha_points: int = 21
    epsilon: float = 0.01
    rel_tol: float = 1e-5
    max_iter: int = 100
    multistart: bool = True

    @property
    def power_linear(self):
        return db_to_linear(self.power_db)

    def validate(self):
        if self.mode not in ("fixed", "generative"):
            raise ConfigurationError("mode must be 'fixed' or 'generative'")
        if self.mode == "fixed":
            if self.realization is None:
                raise ConfigurationError("fixed mode needs a realization name")
            F = fixed_direct_channels(self.realization)
            K, n_u, n_bs = F.shape
            if (self.K, self.n_u, self.n_bs) != (K, n_u, n_bs):
                raise ConfigurationError(
                    f"{self.realization} has K={K}, N_u={n_u}, N_BS={n_bs}; config says "
                    f"K={self.K}, N_u={self.n_u}, N_BS={self.n_bs}"
                )
        else:
            if self.realization is not None:
                raise ConfigurationError("generative mode must not name a realization")
            if self.seed is None:
                raise ConfigurationError("generative mode requires a seed")
        if self.n_ris > 0 and self.seed is None:
            raise ConfigurationError("RIS links are random and require a seed")
        if len(self.geometry.users) != self.K:
            raise ConfigurationError("geometry must give one position per user")
        if self.sigma2 <= 0:
            raise ValidationError("sigma2 must be positive")
        if self.alpha_points < 2:
            raise ValidationError("alpha_points must be at least 2")
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        sub = {"iqi": IqiConfig, "fading": FadingConfig, "geometry": GeometryConfig}
        for key, kind in sub.items():
            if key in data and not isinstance(data[key], kind):
                data[key] = kind(**(data[key] or {}))
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(fields)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key, value in data.items():
            # YAML 1.1 reads "1e-5" as a string
            if fields[key].type == "float" and isinstance(value, str):
                try:
                    data[key] = float(value)
                except ValueError:
                    raise ConfigurationError(f"{key} must be a number, got {value!r}")
        return cls(**data)

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(yaml.safe_load(text) or {})

    def profile(self):
        return self.iqi.profile(self.K, self.n_bs, self.n_u)

    def scene(self):
        return generate_scene(self)


# ---------------------------------------------------------------- fading


def path_gain(distance, exponent, reference=1.0):
    """Large-scale power gain ``(d / d_ref) ** -exponent``."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValidationError("distances must be positive")
    return (distance / reference) ** (-exponent)


def ula_response(n, angle):
    """Half-wavelength uniform linear array response."""
    return np.exp(1j * np.pi * np.arange(n) * np.sin(angle))


def rician(rng, n_rx, n_tx, gain, k_factor, angle_rx, angle_tx):
    """Rician channel: deterministic LoS part from array responses plus
    Rayleigh scattering; ``k_factor = inf`` keeps only the LoS part."""
    los = np.outer(ula_response(n_rx, angle_rx), ula_response(n_tx, angle_tx).conj())
    nlos = (rng.standard_normal((n_rx, n_tx)) + 1j * rng.standard_normal((n_rx, n_tx))) / np.sqrt(2)
    if np.isinf(k_factor):
        small = los
    else:
        small = np.sqrt(k_factor / (1 + k_factor)) * los + np.sqrt(1 / (1 + k_factor)) * nlos
    return np.sqrt(gain) * small


def rayleigh(rng, n_rx, n_tx, gain):
    return np.sqrt(gain / 2) * (rng.standard_normal((n_rx, n_tx)) + 1j * rng.standard_normal((n_rx, n_tx)))


def _angle(src, dst):
    d = np.asarray(dst, float) - np.asarray(src, float)
    return np.arctan2(d[1], d[0])


def _dist(a, b):
    return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))


def generate_ris_links(cfg, rng):
    g = cfg.geometry
    f = cfg.fading
    d0 = _dist(g.bs, g.ris)
    G0 = rician(rng, cfg.n_ris, cfg.n_bs, path_gain(d0, f.alpha_ris, f.reference_distance), f.rician_k,
                _angle(g.ris, g.bs), _angle(g.bs, g.ris))
    G = []
    for pos in g.users:
        dk = _dist(g.ris, pos)
        G.append(rician(rng, cfg.n_u, cfg.n_ris, path_gain(dk, f.alpha_ris, f.reference_distance), f.rician_k,
                        _angle(pos, g.ris), _angle(g.ris, pos)))
    return np.array(G), G0


def generate_scene(cfg):
    """Scene for a config: fixed or Rayleigh direct links, Rician RIS links.

    Deterministic for a given seed: the RIS links are always drawn first
    from ``numpy.random.default_rng(seed)``, then the direct links.
    """
    cfg.validate()
    P = cfg.power_linear
    rng = np.random.default_rng(cfg.seed) if cfg.seed is not None else None
    if cfg.n_ris > 0:
        G, G0 = generate_ris_links(cfg, rng)
    else:
        G, G0 = np.zeros((cfg.K, cfg.n_u, 0)), np.zeros((0, cfg.n_bs))
    if cfg.mode == "fixed":
        F = fixed_direct_channels(cfg.realization)
    else:
        F = np.array([
            rayleigh(rng, cfg.n_u, cfg.n_bs,
                     path_gain(_dist(cfg.geometry.bs, pos), cfg.fading.alpha_direct, cfg.fading.reference_distance))
            for pos in cfg.geometry.users
        ])
    return ComplexScene(F, G, G0, cfg.sigma2, P)


def fixture_config(name, n_ris=0, power_db=10.0, iqi=None, **overrides):
    """Config for a benchmark realization with dimensions filled in."""
    F = fixed_direct_channels(name)
    K, n_u, n_bs = F.shape
    cfg = ScenarioConfig(mode="fixed", realization=name.upper(), K=K, n_bs=n_bs, n_u=n_u, n_ris=n_ris,
                         power_db=power_db, iqi=iqi or IqiConfig(), **overrides)
    if name.upper() in ("C4", "C5"):
        cfg.fading.alpha_ris = 3.0
    return cfg.validate()
