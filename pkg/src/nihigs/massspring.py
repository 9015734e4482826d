"""Two-mass spring chain used as the reference scenario.

Mass ``m1`` is tied to a wall by spring ``k1`` and to mass ``m2`` by spring
``k2``; a force acts on ``m2`` and the measured output is the displacement of
``m2``.  State ordering is ``[x_a, v_a, x_c, v_c]``.
"""

from __future__ import annotations

import numpy as np

from .lti import ContinuousModel, StateSpaceModel, zoh_discretize

M1 = 0.04
M2 = 0.02
K1 = 2.0
K2 = 1.0
H = 0.04

OMEGA_H = 0.1
K_H = 0.6
X0 = (3.0, -2.0, 5.0, -1.0)
XH0 = 0.0
N_STEPS = 2000
DC_GAIN = 1.5

#: Quadratic storage weight for the sampled chain (storage ``x' P x / 2``).
P_REFERENCE = np.array(
    [
        [3.0, 0.0, -1.0, 0.0],
        [0.0, 0.04, 0.0, 0.0],
        [-1.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.02],
    ]
)


def continuous_model(m1=M1, m2=M2, k1=K1, k2=K2) -> ContinuousModel:
    Ac = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-(k1 + k2) / m1, 0.0, k2 / m1, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [k2 / m2, 0.0, -k2 / m2, 0.0],
        ]
    )
    Bc = np.array([[0.0], [0.0], [0.0], [1.0 / m2]])
    C = np.array([[0.0, 0.0, 1.0, 0.0]])
    return ContinuousModel(Ac, Bc, C, params={"m1": m1, "m2": m2, "k1": k1, "k2": k2})


def discrete_model(h=H) -> StateSpaceModel:
    return zoh_discretize(continuous_model(), h)


def _trig():
    return np.cos(0.2), np.cos(0.4), np.sin(0.2), np.sin(0.4)


def closed_form_A() -> np.ndarray:
    """Analytic ``exp(Ac h)`` for the default constants and ``h = 0.04``."""
    c1, c2, s1, s2 = _trig()
    return np.array(
        [
            [c1 / 3 + 2 * c2 / 3, s1 / 15 + s2 / 15, c1 / 3 - c2 / 3, s1 / 15 - s2 / 30],
            [-5 * s1 / 3 - 20 * s2 / 3, c1 / 3 + 2 * c2 / 3, -5 * s1 / 3 + 10 * s2 / 3, c1 / 3 - c2 / 3],
            [2 * c1 / 3 - 2 * c2 / 3, 2 * s1 / 15 - s2 / 15, 2 * c1 / 3 + c2 / 3, 2 * s1 / 15 + s2 / 30],
            [-10 * s1 / 3 + 20 * s2 / 3, 2 * c1 / 3 - 2 * c2 / 3, -10 * s1 / 3 - 10 * s2 / 3, 2 * c1 / 3 + c2 / 3],
        ]
    )


def closed_form_B() -> np.ndarray:
    """Analytic ZOH input matrix for the default constants and ``h = 0.04``.

    The last entry integrates the ``(4, 4)`` entry of ``exp(Ac s)`` times
    ``1/m2``: ``50 * (2/15 s1 + 1/30 s2) = 20/3 s1 + 5/3 s2``.
    """
    c1, c2, s1, s2 = _trig()
    return np.array(
        [
            [-2 * c1 / 3 + c2 / 6 + 0.5],
            [10 * s1 / 3 - 5 * s2 / 3],
            [-4 * c1 / 3 - c2 / 6 + 1.5],
            [20 * s1 / 3 + 5 * s2 / 3],
        ]
    )


def closed_form_B_as_printed() -> np.ndarray:
    """Input matrix with the published sign on the ``s2`` term of the last entry.

    Kept only so tests can show it is inconsistent with ``G(1) = 3/2``.
    """
    B = closed_form_B()
    _, _, s1, s2 = _trig()
    B[3, 0] = 20 * s1 / 3 - 5 * s2 / 3
    return B
