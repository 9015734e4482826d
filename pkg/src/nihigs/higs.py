"""Discrete-time hybrid integrator-gain system (HIGS).

The element integrates its input while the integrator update keeps the
input/output pair inside the sector ``[0, k_h]`` and otherwise acts as the
static gain ``k_h``::

    x+ = x + omega_h e   if (x, e) in F
    x+ = k_h e           otherwise
    y  = x+

with ``F = {(x, e) : (x + omega_h e) e >= (x + omega_h e)^2 / k_h}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

from .errors import NonFiniteError

__all__ = [
    "Mode",
    "HigsParams",
    "HigsState",
    "HigsStep",
    "SaniCheck",
    "in_sector",
    "higs_step",
    "sani_storage",
    "check_sani_step",
]

SECTOR_RTOL = 1e-14
SANI_RTOL = 1e-12


class Mode(str, Enum):
    INTEGRATOR = "I"
    GAIN = "G"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class HigsParams:
    """Integrator frequency ``omega_h`` (per step) and gain ``k_h``.

    ``omega_h`` is already the discrete-time value; no sampling period is
    applied anywhere.
    """

    omega_h: float
    k_h: float

    def __post_init__(self):
        w, k = float(self.omega_h), float(self.k_h)
        if not (math.isfinite(w) and math.isfinite(k)):
            raise NonFiniteError("HIGS parameters must be finite")
        if w < 0:
            raise ValueError(f"omega_h must be >= 0, got {w}")
        if k <= 0:
            raise ValueError(f"k_h must be > 0, got {k}")
        object.__setattr__(self, "omega_h", w)
        object.__setattr__(self, "k_h", k)


@dataclass(frozen=True)
class HigsState:
    x_tilde: float = 0.0
    last_mode: Optional[Mode] = None

    def __post_init__(self):
        if not math.isfinite(self.x_tilde):
            raise NonFiniteError("HIGS state must be finite")


class HigsStep(NamedTuple):
    state: HigsState
    y: float
    mode: Mode


class SaniCheck(NamedTuple):
    slack: float
    holds: bool


def in_sector(p: HigsParams, x_tilde: float, e: float) -> bool:
    """Sector test; points on the boundary count as inside.

    A slack of ``1e-14 * max(1, e^2, x^2)`` absorbs round-off so the mode
    does not chatter on the boundary.
    """
    v = x_tilde + p.omega_h * e
    tau = SECTOR_RTOL * max(1.0, e * e, x_tilde * x_tilde)
    return v * e >= v * v / p.k_h - tau


def higs_step(p: HigsParams, s: HigsState, e: float) -> HigsStep:
    e = float(e)
    if not math.isfinite(e):
        raise NonFiniteError(f"HIGS input must be finite, got {e}")
    if in_sector(p, s.x_tilde, e):
        x_next, mode = s.x_tilde + p.omega_h * e, Mode.INTEGRATOR
    else:
        x_next, mode = p.k_h * e, Mode.GAIN
    return HigsStep(HigsState(x_next, mode), x_next, mode)


def sani_storage(p: HigsParams, x_tilde: float) -> float:
    """Storage ``x^2 / (2 k_h)``."""
    return x_tilde * x_tilde / (2.0 * p.k_h)


def check_sani_step(p: HigsParams, x_tilde: float, e: float) -> SaniCheck:
    """Evaluate the one-step dissipation inequality

    ``V(x+) - V(x) <= e (x+ - x)``

    and return its slack (right minus left side).  The inequality holds for
    every state and input; ``holds`` allows a relative round-off margin of
    ``1e-12 * max(1, e^2, x^2)``.
    """
    step = higs_step(p, HigsState(x_tilde), e)
    x_next = step.state.x_tilde
    slack = e * (x_next - x_tilde) - (sani_storage(p, x_next) - sani_storage(p, x_tilde))
    tol = SANI_RTOL * max(1.0, e * e, x_tilde * x_tilde)
    return SaniCheck(slack, slack >= -tol)
