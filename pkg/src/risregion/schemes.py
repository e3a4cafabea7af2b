"""Transmission scheme labels and their meaning."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError
from .rates import SignalingStructure

TIN = "TIN"
RS = "one_layer_RS"
TDMA = "TDMA_TS"


@dataclass(frozen=True)
class SchemeConfig:
    label: str
    signaling: SignalingStructure
    access: str
    ris: bool

    @property
    def uses_common(self):
        return self.access == RS

    @property
    def is_tdma(self):
        return self.access == TDMA


_BASE = {
    "PT": (SignalingStructure.PROPER, TIN),
    "IT": (SignalingStructure.IMPROPER, TIN),
    "PR": (SignalingStructure.PROPER, RS),
    "IR": (SignalingStructure.IMPROPER, RS),
}

KNOWN_SCHEMES = ("PT", "IT", "PR", "IR", "PT_IR", "IT_IR", "PR_IR", "IR_IR", "TS", "TS_IR")


def parse_scheme(label):
    """``PT``/``IT``/``PR``/``IR`` optionally suffixed ``_IR`` (RIS present), or ``TS``/``TS_IR``."""
    if isinstance(label, SchemeConfig):
        return label
    name = label.strip().upper()
    ris = name.endswith("_IR")
    base = name[:-3] if ris else name
    if base == "TS":
        # single-user transmissions; improper signalling contains proper
        return SchemeConfig(name, SignalingStructure.IMPROPER, TDMA, ris)
    if base not in _BASE:
        raise ConfigurationError(f"unknown scheme {label!r}; known: {', '.join(KNOWN_SCHEMES)}")
    signaling, access = _BASE[base]
    return SchemeConfig(name, signaling, access, ris)
