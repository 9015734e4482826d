"""Discrete-time SISO state-space core.

Models are strictly proper: ``x[k+1] = A x[k] + B u[k]``, ``y[k] = C x[k]``.
All arrays held by a model are copied and marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, NonFiniteError, SingularMatrixError

__all__ = [
    "StateSpaceModel",
    "ContinuousModel",
    "Minimality",
    "make_model",
    "zoh_discretize",
    "transfer_eval",
    "is_minimal",
    "plant_step",
    "solve_checked",
    "RCOND_CAP",
    "RANK_RTOL",
]

#: Reciprocal condition number below which a matrix is treated as singular.
RCOND_CAP = 1e-12
#: Relative singular-value threshold used for numerical rank.
RANK_RTOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _as_matrix(value, name: str) -> np.ndarray:
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionError(f"{name} is not a numeric matrix") from exc
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got {a.ndim}-D")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return a


def _check_shapes(A, B, C, names=("A", "B", "C")) -> int:
    na, nb, nc = names
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError(f"{na} must be square, got shape {A.shape}")
    if n == 0:
        raise DimensionError(f"{na} must have at least one state")
    if B.shape != (n, 1):
        raise DimensionError(f"{nb} must have shape ({n}, 1), got {B.shape}")
    if C.shape != (1, n):
        raise DimensionError(f"{nc} must have shape (1, {n}), got {C.shape}")
    return n


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Discrete-time SISO plant without feedthrough.

    Use :func:`make_model` to build one from array-likes; the constructor
    re-validates shapes and finiteness either way.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        C = _as_matrix(self.C, "C")
        _check_shapes(A, B, C)
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def similarity(self, T) -> "StateSpaceModel":
        """Return the model in coordinates ``z = T x``."""
        T = np.asarray(T, dtype=float)
        Ti = np.linalg.inv(T)
        return StateSpaceModel(T @ self.A @ Ti, T @ self.B, self.C @ Ti)

    def __eq__(self, other):
        if not isinstance(other, StateSpaceModel):
            return NotImplemented
        return (
            np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.C, other.C)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ContinuousModel:
    """Continuous-time SISO plant ``dx/dt = Ac x + Bc u``, ``y = C x``.

    ``params`` holds optional named physical constants (masses, stiffnesses)
    for provenance; they do not enter any computation.
    """

    Ac: np.ndarray
    Bc: np.ndarray
    C: np.ndarray
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        Ac = _as_matrix(self.Ac, "Ac")
        Bc = _as_matrix(self.Bc, "Bc")
        C = _as_matrix(self.C, "C")
        _check_shapes(Ac, Bc, C, names=("Ac", "Bc", "C"))
        object.__setattr__(self, "Ac", _frozen(Ac))
        object.__setattr__(self, "Bc", _frozen(Bc))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def n(self) -> int:
        return self.Ac.shape[0]


class Minimality(NamedTuple):
    controllable: bool
    observable: bool
    minimal: bool
    controllability_rank: int
    observability_rank: int


def make_model(A, B, C) -> StateSpaceModel:
    """Validate and wrap ``(A, B, C)``.

    Raises
    ------
    DimensionError
        If the shapes are not ``(n, n)``, ``(n, 1)``, ``(1, n)``.
    NonFiniteError
        If any entry is NaN or infinite.
    """
    return StateSpaceModel(A, B, C)


def zoh_discretize(cm: ContinuousModel, h: float) -> StateSpaceModel:
    """Zero-order-hold discretization with sampling period ``h``.

    The exponential of the augmented matrix ``[[Ac, Bc], [0, 0]] * h`` holds
    ``exp(Ac h)`` in its leading block and ``int_0^h exp(Ac s) ds Bc`` in the
    last column.
    """
    h = float(h)
    if not np.isfinite(h) or h <= 0:
        raise ValueError(f"sampling period h must be positive and finite, got {h!r}")
    n = cm.n
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = cm.Ac
    M[:n, n:] = cm.Bc
    with np.errstate(over="raise", invalid="raise"):
        try:
            E = expm(M * h)
        except FloatingPointError as exc:
            raise NonFiniteError("matrix exponential overflowed") from exc
    if not np.all(np.isfinite(E)):
        raise NonFiniteError("matrix exponential overflowed")
    return StateSpaceModel(E[:n, :n], E[:n, n:], cm.C)


def solve_checked(M: np.ndarray, rhs: np.ndarray, what: str = "matrix", scale: float = 0.0) -> np.ndarray:
    """Solve ``M X = rhs`` after refusing near-singular ``M``.

    The smallest singular value is compared with ``max(||M||, scale)``; pass
    the magnitude of the operands ``M`` was formed from (e.g. ``||A||`` for
    ``I - A``) so that cancellation is caught as well.
    """
    s = np.linalg.svd(M, compute_uv=False)
    smax, smin = max(s[0], scale), s[-1]
    rcond = smin / smax if smax > 0 else 0.0
    if rcond < RCOND_CAP:
        raise SingularMatrixError(
            f"{what} is singular to working precision "
            f"(smallest singular value {smin:.3e}, rcond {rcond:.3e})",
            smallest_singular_value=float(smin),
            rcond=float(rcond),
        )
    return np.linalg.solve(M, rhs)


def transfer_eval(m: StateSpaceModel, z: float) -> float:
    """Evaluate ``G(z) = C (zI - A)^{-1} B`` at a real point ``z``."""
    z = float(z)
    zI_A = z * np.eye(m.n) - m.A
    v = solve_checked(zI_A, m.B, what=f"zI - A at z={z!r}", scale=max(abs(z), np.linalg.norm(m.A, 2)))
    return float((m.C @ v)[0, 0])


def _rank(M: np.ndarray) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    n = max(M.shape)
    return int(np.sum(s > n * s[0] * RANK_RTOL))


def is_minimal(m: StateSpaceModel) -> Minimality:
    """Kalman rank tests for controllability and observability."""
    n = m.n
    ctrb = [m.B]
    obsv = [m.C]
    for _ in range(n - 1):
        ctrb.append(m.A @ ctrb[-1])
        obsv.append(obsv[-1] @ m.A)
    rc = _rank(np.hstack(ctrb))
    ro = _rank(np.vstack(obsv))
    return Minimality(rc == n, ro == n, rc == n and ro == n, rc, ro)


def plant_step(m: StateSpaceModel, x, u: float) -> tuple[np.ndarray, float]:
    """Advance the plant one step.

    Returns ``(x_next, y)`` where ``y = C x`` is the output at the current
    step, evaluated before the update.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n,):
        raise DimensionError(f"state must have shape ({m.n},), got {x.shape}")
    y = float(m.C[0] @ x)
    x_next = m.A @ x + m.B[:, 0] * float(u)
    return x_next, y
