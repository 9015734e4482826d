"""Positive-feedback loop of an NI plant and a HIGS.

The plant output drives the HIGS (``e = y``) and the HIGS output drives the
plant (``u = x_tilde[k+1]``).  Because the plant has no feedthrough the loop
is explicit: each step computes ``e``, then the HIGS update, then the plant
update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, NonFiniteError, SingularMatrixError
from .higs import HigsParams, HigsState, Mode, higs_step
from .lti import RCOND_CAP, StateSpaceModel, is_minimal, transfer_eval
from .ni import DEFAULT_TOL, NICertificate, check_ni_certificate

__all__ = [
    "DesignReport",
    "ClosedLoopTrace",
    "TraceAnalysis",
    "dc_gain",
    "validate_design",
    "design_higs",
    "lyapunov_matrix",
    "lyapunov_w",
    "simulate",
    "analyze_trace",
]

log = logging.getLogger(__name__)

PD_RTOL = 1e-12


def dc_gain(m: StateSpaceModel) -> float:
    """``G(1)``, refusing values indistinguishable from zero.

    Raises
    ------
    SingularMatrixError
        If ``I - A`` is singular or ``|G(1)|`` is below round-off level.
    """
    g1 = transfer_eval(m, 1.0)
    v = np.linalg.solve(np.eye(m.n) - m.A, m.B)
    scale = np.linalg.norm(m.C) * np.linalg.norm(v)
    if abs(g1) <= RCOND_CAP * scale:
        raise SingularMatrixError(f"G(1) = {g1:.3e} is zero to working precision")
    return g1


@dataclass(frozen=True)
class DesignReport:
    """Hypotheses of the closed-loop stability result, checked one by one.

    ``g1_nonpositive`` is informational: with ``G(1) <= 0`` the gain
    condition ``k_h G(1) < 1`` holds for every ``k_h > 0``, while the bound
    ``k_h < 1 / G(1)`` is not meaningful.  It does not affect ``verdict``.
    """

    g1: float
    condition_omega: bool
    condition_gain: bool
    minimal: bool
    det_ima_ok: bool
    certificate_ok: bool
    lyapunov_pd: bool
    lyapunov_min_eig: float
    g1_nonpositive: bool

    @property
    def verdict(self) -> bool:
        return all(
            (
                self.condition_omega,
                self.condition_gain,
                self.minimal,
                self.det_ima_ok,
                self.certificate_ok,
                self.lyapunov_pd,
            )
        )

    def as_dict(self) -> dict:
        return {
            "g1": self.g1,
            "condition_omega": self.condition_omega,
            "condition_gain": self.condition_gain,
            "minimal": self.minimal,
            "det_ima_ok": self.det_ima_ok,
            "certificate_ok": self.certificate_ok,
            "lyapunov_pd": self.lyapunov_pd,
            "lyapunov_min_eig": self.lyapunov_min_eig,
            "g1_nonpositive": self.g1_nonpositive,
            "verdict": self.verdict,
        }


def lyapunov_matrix(m: StateSpaceModel, cert: NICertificate, p: HigsParams) -> np.ndarray:
    """Weight ``M`` with ``W = [x; x_tilde]' M [x; x_tilde] / 2``."""
    n = m.n
    M = np.empty((n + 1, n + 1))
    M[:n, :n] = cert.P
    M[:n, n] = -m.C[0]
    M[n, :n] = -m.C[0]
    M[n, n] = 1.0 / p.k_h
    return M


def validate_design(
    m: StateSpaceModel, cert: NICertificate, p: HigsParams, tol: float = DEFAULT_TOL
) -> DesignReport:
    """Check ``0 < omega_h <= k_h`` and ``k_h G(1) < 1`` plus the plant-side
    hypotheses (minimality, certificate) and positive definiteness of the
    closed-loop Lyapunov weight.
    """
    g1 = dc_gain(m)
    cert_ok = check_ni_certificate(m, cert, tol).verdict
    M = lyapunov_matrix(m, cert, p)
    eig = np.linalg.eigvalsh(M)
    lyap_pd = bool(eig[0] > PD_RTOL * np.max(np.abs(eig)))
    if g1 <= 0:
        log.warning("G(1) = %.6g <= 0: gain condition holds for any k_h > 0", g1)
    return DesignReport(
        g1=g1,
        condition_omega=bool(0 < p.omega_h <= p.k_h),
        condition_gain=bool(p.k_h * g1 < 1),
        minimal=is_minimal(m).minimal,
        det_ima_ok=True,
        certificate_ok=cert_ok,
        lyapunov_pd=lyap_pd,
        lyapunov_min_eig=float(eig[0]),
        g1_nonpositive=bool(g1 <= 0),
    )


def design_higs(m: StateSpaceModel, margin: float = 0.9) -> HigsParams:
    """Pick parameters meeting ``0 < omega_h <= k_h`` and ``k_h G(1) < 1``.

    ``k_h = margin / G(1)`` and ``omega_h = k_h / 2`` when ``G(1) > 0``;
    otherwise any gain works and ``k_h = 1``, ``omega_h = 0.5`` is returned.
    """
    margin = float(margin)
    if not 0 < margin < 1:
        raise ValueError(f"margin must lie in (0, 1), got {margin}")
    g1 = dc_gain(m)
    if g1 > 0:
        k_h = margin / g1
    else:
        log.info("G(1) = %.6g <= 0: k_h G(1) < 1 holds for every k_h > 0", g1)
        k_h = 1.0
    return HigsParams(omega_h=k_h / 2, k_h=k_h)


def lyapunov_w(m: StateSpaceModel, cert: NICertificate, p: HigsParams, x, x_tilde: float) -> float:
    """``W = x'Px / 2 + x_tilde^2 / (2 k_h) - (C x) x_tilde``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n,):
        raise DimensionError(f"state must have shape ({m.n},), got {x.shape}")
    if cert.n != m.n:
        raise DimensionError(f"certificate has {cert.n} states, model has {m.n}")
    y = float(m.C[0] @ x)
    return 0.5 * float(x @ cert.P @ x) + x_tilde * x_tilde / (2 * p.k_h) - y * x_tilde


@dataclass(frozen=True, eq=False)
class ClosedLoopTrace:
    """Per-step record of a closed-loop run.

    Row ``k`` holds the state ``(x[k], x_tilde[k])`` at the start of the
    step and the signals computed during it: ``e[k] = C x[k]``,
    ``u[k] = x_tilde[k+1]`` and the HIGS mode.  The state reached after the
    last row is kept in ``x_final`` / ``x_tilde_final``.  ``W`` has one more
    entry than there are rows (the last one is evaluated at the final
    state) and is ``None`` when no certificate was supplied.
    """

    x: np.ndarray
    x_tilde: np.ndarray
    e: np.ndarray
    u: np.ndarray
    mode: tuple
    x_final: np.ndarray
    x_tilde_final: float
    W: Optional[np.ndarray]
    params: HigsParams
    x0: np.ndarray
    xh0: float
    n_steps: int
    diverged: bool = False

    def __len__(self):
        return len(self.e)

    @property
    def states(self) -> np.ndarray:
        """Combined states ``[x, x_tilde]`` for every row plus the final one."""
        rows = np.column_stack([self.x, self.x_tilde])
        last = np.append(self.x_final, self.x_tilde_final)
        return np.vstack([rows, last])


def simulate(
    m: StateSpaceModel,
    p: HigsParams,
    x0,
    xh0: float = 0.0,
    n_steps: int = 2000,
    cert: Optional[NICertificate] = None,
) -> ClosedLoopTrace:
    """Run the loop for ``n_steps`` steps from ``(x0, xh0)``.

    If a non-finite value appears the trace stops at the last finite row and
    ``diverged`` is set.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    x = np.array(x0, dtype=float)
    if x.shape != (m.n,):
        raise DimensionError(f"x0 must have shape ({m.n},), got {x.shape}")
    if not (np.all(np.isfinite(x)) and np.isfinite(xh0)):
        raise NonFiniteError("initial conditions must be finite")
    x0 = x.copy()
    A, b, c = m.A, m.B[:, 0], m.C[0]

    xs = np.empty((n_steps, m.n))
    xts = np.empty(n_steps)
    es = np.empty(n_steps)
    us = np.empty(n_steps)
    modes = []
    s = HigsState(float(xh0))
    diverged = False
    rows = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            e = float(c @ x)
            if not np.isfinite(e):
                diverged = True
                break
            step = higs_step(p, s, e)
            x_next = A @ x + b * step.y
            if not (np.isfinite(step.y) and np.all(np.isfinite(x_next))):
                diverged = True
                break
            xs[k], xts[k], es[k], us[k] = x, s.x_tilde, e, step.y
            modes.append(step.mode)
            rows = k + 1
            x, s = x_next, step.state
    if diverged:
        log.warning("closed loop diverged after %d steps", rows)
    xt_final = s.x_tilde

    xs, xts, es, us = xs[:rows], xts[:rows], es[:rows], us[:rows]
    W = None
    if cert is not None:
        W = np.array(
            [lyapunov_w(m, cert, p, xs[k], xts[k]) for k in range(rows)]
            + [lyapunov_w(m, cert, p, x, xt_final)]
        )
    for a in (xs, xts, es, us):
        a.setflags(write=False)
    return ClosedLoopTrace(
        x=xs,
        x_tilde=xts,
        e=es,
        u=us,
        mode=tuple(modes),
        x_final=x,
        x_tilde_final=float(xt_final),
        W=W,
        params=p,
        x0=x0,
        xh0=float(xh0),
        n_steps=n_steps,
        diverged=diverged,
    )


@dataclass(frozen=True)
class TraceAnalysis:
    converged: bool
    initial_norm: float
    final_norm: float
    w_monotone_from: Optional[int]
    max_w_increase: Optional[float]
    mode_counts: dict
    diverged: bool

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "initial_norm": self.initial_norm,
            "final_norm": self.final_norm,
            "w_monotone_from": self.w_monotone_from,
            "max_w_increase": self.max_w_increase,
            "mode_counts": dict(self.mode_counts),
            "diverged": self.diverged,
        }


def analyze_trace(t: ClosedLoopTrace, rel_threshold: float = 1e-3, w_rtol: float = 1e-10) -> TraceAnalysis:
    """Summarize a trace.

    ``converged`` compares the final combined state norm with
    ``rel_threshold`` times the initial one.  ``max_w_increase`` is the
    largest ``W[k+1] - W[k]`` for ``k >= 1`` and ``w_monotone_from`` the
    first index from which ``W`` never rises by more than
    ``w_rtol * max(1, W[1])``.
    """
    states = t.states
    n0 = float(np.linalg.norm(states[0]))
    nf = float(np.linalg.norm(states[-1]))
    converged = (not t.diverged) and nf <= rel_threshold * n0
    counts = {"I": 0, "G": 0}
    for md in t.mode:
        counts[Mode(md).value] += 1

    monotone_from = max_inc = None
    if t.W is not None and len(t.W) >= 2:
        d = np.diff(t.W)
        bad = np.nonzero(d > w_rtol * max(1.0, abs(t.W[1])))[0]
        monotone_from = int(bad[-1] + 1) if bad.size else 0
        max_inc = float(d[1:].max()) if d.size > 1 else None
    return TraceAnalysis(
        converged=bool(converged),
        initial_norm=n0,
        final_norm=nf,
        w_monotone_from=monotone_from,
        max_w_increase=max_inc,
        mode_counts=counts,
        diverged=t.diverged,
    )
