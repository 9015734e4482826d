"""Negative-imaginary certificates for discrete-time SISO models.

Two certificate flavours are supported:

* :class:`NICertificate` -- a weight ``P`` with ``A'PA - P <= 0`` and
  ``C = B'(I - A)^{-T} P``.  The storage ``V(x) = x'Px / 2`` then satisfies
  ``V(x+) - V(x) <= u (y+ - y)`` along every trajectory.
* :class:`BilinearCertificate` -- a weight ``X`` with ``X - A'XA >= 0`` and
  ``C = -B'(A' - I)^{-1} X (A + I)``, the condition obtained by mapping the
  continuous-time frequency-domain definition through the bilinear transform.

The two verdicts are independent; neither is used to infer the other.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NIHigsError, NonFiniteError, NotMinimalError
from .lti import StateSpaceModel, is_minimal, solve_checked

__all__ = [
    "NICertificate",
    "BilinearCertificate",
    "CertificateReport",
    "EmpiricalNIResult",
    "SearchExhausted",
    "check_ni_certificate",
    "check_bilinear_certificate",
    "find_ni_certificate",
    "empirical_ni_test",
    "DEFAULT_TOL",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
PD_RTOL = 1e-12


def _sym_pd(M, name: str) -> np.ndarray:
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    M = (M + M.T) / 2
    eig = np.linalg.eigvalsh(M)
    scale = np.max(np.abs(eig)) if eig.size else 0.0
    if scale == 0 or eig[0] <= PD_RTOL * scale:
        raise ValueError(f"{name} is not positive definite (smallest eigenvalue {eig[0]:.3e})")
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class NICertificate:
    """Symmetric positive definite storage weight ``P``.

    ``P`` is symmetrized on construction; a matrix that is not positive
    definite (relative to its own scale) is rejected.
    """

    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", _sym_pd(self.P, "P"))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def storage(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.P @ x)

    def similarity(self, T) -> "NICertificate":
        """Certificate for the model in coordinates ``z = T x``."""
        Ti = np.linalg.inv(np.asarray(T, dtype=float))
        return NICertificate(Ti.T @ self.P @ Ti)


@dataclass(frozen=True, eq=False)
class BilinearCertificate:
    X: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _sym_pd(self.X, "X"))

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of a certificate check.

    ``lmi_residual`` is the largest eigenvalue of the Stein-type matrix and
    must not exceed ``tol``; ``equality_residual`` is the max-abs mismatch of
    the output equation; ``pd_margin`` is the smallest eigenvalue of the
    weight.
    """

    lmi_residual: float
    equality_residual: float
    pd_margin: float
    tol: float
    verdict: bool

    @classmethod
    def from_residuals(cls, lmi, eq, pd, tol):
        lmi, eq, pd = float(lmi), float(eq), float(pd)
        verdict = lmi <= tol and eq <= tol and pd > tol
        return cls(lmi, eq, pd, float(tol), bool(verdict))

    def as_dict(self) -> dict:
        return {
            "lmi_residual": self.lmi_residual,
            "equality_residual": self.equality_residual,
            "pd_margin": self.pd_margin,
            "tol": self.tol,
            "verdict": self.verdict,
        }


def _check_dims(m: StateSpaceModel, W: np.ndarray, name: str):
    if W.shape != (m.n, m.n):
        raise ValueError(f"{name} has shape {W.shape}, model has {m.n} states")


def _dc_direction(m: StateSpaceModel) -> np.ndarray:
    """``(I - A)^{-1} B`` as a flat vector."""
    return solve_checked(np.eye(m.n) - m.A, m.B, what="I - A", scale=_op_scale(m))[:, 0]


def _op_scale(m: StateSpaceModel) -> float:
    return max(1.0, np.linalg.norm(m.A, 2))


def check_ni_certificate(m: StateSpaceModel, cert: NICertificate, tol: float = DEFAULT_TOL) -> CertificateReport:
    """Check ``A'PA - P <= 0`` and ``C = B'(I - A)^{-T} P``.

    Raises
    ------
    SingularMatrixError
        If ``I - A`` is singular.
    """
    P = cert.P
    _check_dims(m, P, "P")
    mdc = _dc_direction(m)
    L = m.A.T @ P @ m.A - P
    lmi = np.linalg.eigvalsh((L + L.T) / 2)[-1]
    eq = np.max(np.abs(m.C[0] - P @ mdc))
    pd = np.linalg.eigvalsh(P)[0]
    return CertificateReport.from_residuals(lmi, eq, pd, tol)


def check_bilinear_certificate(
    m: StateSpaceModel, cert: BilinearCertificate, tol: float = DEFAULT_TOL
) -> CertificateReport:
    """Check ``X - A'XA >= 0`` and ``C = -B'(A' - I)^{-1} X (A + I)``.

    ``lmi_residual`` is reported as ``lambda_max(A'XA - X)`` so that, as in
    :func:`check_ni_certificate`, a passing value is ``<= tol``.
    """
    X = cert.X
    _check_dims(m, X, "X")
    n = m.n
    I = np.eye(n)
    solve_checked(I + m.A, np.zeros((n, 1)), what="I + A", scale=_op_scale(m))
    # B'(A' - I)^{-1} = ((A - I)^{-1} B)'
    w = solve_checked(m.A - I, m.B, what="I - A", scale=_op_scale(m))[:, 0]
    required = -(w @ X @ (m.A + I))
    L = m.A.T @ X @ m.A - X
    lmi = np.linalg.eigvalsh((L + L.T) / 2)[-1]
    eq = np.max(np.abs(m.C[0] - required))
    pd = np.linalg.eigvalsh(X)[0]
    return CertificateReport.from_residuals(lmi, eq, pd, tol)


class SearchExhausted(NIHigsError):
    """The certificate search stopped without finding a certificate.

    This is not a proof that the model fails to be NI; the search is
    incomplete.
    """

    def __init__(self, message, phi=float("nan"), iterations=0, method=""):
        super().__init__(message)
        self.phi = float(phi)
        self.iterations = int(iterations)
        self.method = method


def _affine_projector(mdc: np.ndarray, c: np.ndarray):
    """Orthogonal projector onto ``{P symmetric : P mdc = c}``."""
    s = mdc @ mdc

    def project(P):
        P = (P + P.T) / 2
        r = c - P @ mdc
        v = (r - mdc * (mdc @ r) / (2 * s)) / s
        Q = P + np.outer(v, mdc) + np.outer(mdc, v)
        return (Q + Q.T) / 2

    def project_direction(G):
        # tangent space {D symmetric : D mdc = 0}
        G = (G + G.T) / 2
        r = -G @ mdc
        v = (r - mdc * (mdc @ r) / (2 * s)) / s
        D = G + np.outer(v, mdc) + np.outer(mdc, v)
        return (D + D.T) / 2

    return project, project_direction


def _phi(A, P, eps):
    """Feasibility merit and one subgradient."""
    L = A.T @ P @ A - P
    wl, Vl = np.linalg.eigh((L + L.T) / 2)
    wp, Vp = np.linalg.eigh(P)
    f_lmi, f_pd = wl[-1], eps - wp[0]
    if f_lmi >= f_pd:
        v = Vl[:, -1]
        return f_lmi, A @ np.outer(v, v) @ A.T - np.outer(v, v)
    v = Vp[:, 0]
    return f_pd, -np.outer(v, v)


def _search_subgradient(m, eps, max_iters, tol):
    mdc = _dc_direction(m)
    c = m.C[0]
    project, project_direction = _affine_projector(mdc, c)
    step0 = np.linalg.norm(c) / np.linalg.norm(mdc)
    P = project(step0 * np.eye(m.n))
    f = np.inf
    for k in range(1, max_iters + 1):
        f, G = _phi(m.A, P, eps)
        if f <= tol:
            return P, k, f
        G = project_direction(G)
        gnorm = np.linalg.norm(G)
        if gnorm == 0:
            break
        P = project(P - (step0 / np.sqrt(k)) * G / gnorm)
    raise SearchExhausted(
        f"subgradient search exhausted after {max_iters} iterations (merit {f:.3e})",
        phi=f,
        iterations=max_iters,
        method="subgradient",
    )


def _search_sdp(m, eps, tol):
    import cvxpy as cp

    n = m.n
    mdc = _dc_direction(m)
    c = m.C[0]
    P = cp.Variable((n, n), symmetric=True)
    t = cp.Variable()
    I = np.eye(n)
    # lower bound on t keeps the problem bounded when A is strictly stable
    scale = np.linalg.norm(c) / np.linalg.norm(mdc)
    constraints = [
        m.A.T @ P @ m.A - P << t * I,
        P >> eps * I,
        P @ mdc == c,
        t >= -scale,
    ]
    prob = cp.Problem(cp.Minimize(t), constraints)
    solver = "CLARABEL" if "CLARABEL" in cp.installed_solvers() else None
    try:
        prob.solve(solver=solver)
    except cp.SolverError as exc:
        raise SearchExhausted(f"SDP solver failed: {exc}", method="sdp") from exc
    if prob.status not in ("optimal", "optimal_inaccurate") or P.value is None:
        raise SearchExhausted(f"SDP search ended with status {prob.status!r}", method="sdp")
    Pv = (P.value + P.value.T) / 2
    f, _ = _phi(m.A, Pv, eps)
    if f > tol:
        raise SearchExhausted(
            f"SDP optimum violates the constraints by {f:.3e} > tol", phi=f, method="sdp"
        )
    iters = prob.solver_stats.num_iters if prob.solver_stats is not None else 0
    return Pv, iters or 0, f


def find_ni_certificate(
    m: StateSpaceModel,
    eps: float = 1e-6,
    max_iters: int = 50_000,
    tol: float = 1e-6,
    method: str = "sdp",
) -> NICertificate:
    """Search for a weight ``P`` certifying that ``m`` is NI.

    The equality ``P (I - A)^{-1} B = C'`` is imposed exactly, and the search
    drives ``max(lambda_max(A'PA - P), lambda_max(eps I - P))`` to ``<= tol``.

    Parameters
    ----------
    method : {"sdp", "subgradient"}
        ``"sdp"`` minimizes the LMI residual with an interior-point conic
        solver.  ``"subgradient"`` runs projected subgradient descent with
        step ``c / sqrt(k)``; it is adequate when the feasible set has
        interior but stalls on lossless plants, whose feasible set lies on
        ``A'PA = P``.  ``max_iters`` applies to the subgradient method only.

    Returns
    -------
    NICertificate
        Always re-validated with :func:`check_ni_certificate` at ``tol``.

    Raises
    ------
    NotMinimalError
        If the model is not minimal.
    SingularMatrixError
        If ``I - A`` is singular.
    SearchExhausted
        If no certificate was found.
    """
    if not is_minimal(m).minimal:
        raise NotMinimalError("certificate search requires a minimal realization")
    _dc_direction(m)
    if method == "sdp":
        P, iters, f = _search_sdp(m, eps, tol)
    elif method == "subgradient":
        P, iters, f = _search_subgradient(m, eps, max_iters, tol)
    else:
        raise ValueError(f"unknown search method {method!r}")
    log.debug("certificate search (%s): merit %.3e after %d iterations", method, f, iters)
    try:
        cert = NICertificate(P)
    except ValueError as exc:
        raise SearchExhausted(str(exc), phi=f, iterations=iters, method=method) from exc
    report = check_ni_certificate(m, cert, tol)
    if not report.verdict:
        raise SearchExhausted(
            f"candidate failed re-validation: {report}", phi=f, iterations=iters, method=method
        )
    return cert


@dataclass(frozen=True)
class EmpiricalNIResult:
    passed: bool
    worst_slack: float
    worst_trial: int
    worst_step: int
    trials: int
    horizon: int


def _trial_data(seed, trial, n, horizon, state_scale, input_scale):
    rng = np.random.default_rng([seed, trial])
    x0 = state_scale * rng.standard_normal(n)
    u = input_scale * rng.uniform(-1.0, 1.0, horizon)
    return x0, u


def empirical_ni_test(
    m: StateSpaceModel,
    cert: NICertificate,
    trials: int = 1000,
    horizon: int = 50,
    seed: int = 0,
    atol: float = 1e-10,
    state_scale: float = 1.0,
    input_scale: float = 1.0,
) -> EmpiricalNIResult:
    """Evaluate ``V(x+) - V(x) <= u (y+ - y)`` along random trajectories.

    Each trial draws a standard-normal initial state and i.i.d. uniform
    inputs on ``[-1, 1]`` (scaled by ``state_scale`` / ``input_scale``) from
    a generator seeded by ``(seed, trial)``, so trials are reproducible and
    independent of evaluation order.  ``worst_slack`` is the minimum over
    all steps of ``u (y+ - y) - (V(x+) - V(x))``; the test passes when it is
    ``>= -atol``.

    The certificate is not required to pass :func:`check_ni_certificate`;
    feeding a broken one is how the test's sensitivity is established.
    """
    _check_dims(m, cert.P, "P")
    n = m.n
    X = np.empty((trials, n))
    U = np.empty((trials, horizon))
    for i in range(trials):
        X[i], U[i] = _trial_data(seed, i, n, horizon, state_scale, input_scale)
    P, A, b, c = cert.P, m.A, m.B[:, 0], m.C[0]
    worst, worst_trial, worst_step = np.inf, -1, -1
    V = 0.5 * np.einsum("ti,ij,tj->t", X, P, X)
    y = X @ c
    for k in range(horizon):
        Xn = X @ A.T + np.outer(U[:, k], b)
        Vn = 0.5 * np.einsum("ti,ij,tj->t", Xn, P, Xn)
        yn = Xn @ c
        slack = U[:, k] * (yn - y) - (Vn - V)
        i = int(np.argmin(slack))
        if slack[i] < worst:
            worst, worst_trial, worst_step = float(slack[i]), i, k
        X, V, y = Xn, Vn, yn
    if trials == 0 or horizon == 0:
        worst = 0.0
    return EmpiricalNIResult(bool(worst >= -atol), worst, worst_trial, worst_step, trials, horizon)
