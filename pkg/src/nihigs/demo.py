"""End-to-end run on the two-mass spring chain."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import massspring as ms
from .higs import HigsParams
from .lti import StateSpaceModel, transfer_eval
from .loop import ClosedLoopTrace, DesignReport, TraceAnalysis, analyze_trace, simulate, validate_design
from .ni import CertificateReport, EmpiricalNIResult, NICertificate, check_ni_certificate, empirical_ni_test


def resolve_storage_scale(m: StateSpaceModel, P, candidates=(1.0, 0.5)) -> tuple[float, list[float]]:
    """Pick the scaling of ``P`` that best satisfies ``C = B'(I - A)^{-T} (alpha P)``.

    A storage written as ``x'Px`` corresponds to ``x'(2P)x / 2``, so the same
    printed matrix may need a factor before it fits the half-quadratic
    convention used here.  The equality is linear in ``alpha``, so at most
    one candidate can make it hold.  Returns the winner and every
    candidate's equality residual.
    """
    P = np.asarray(P, dtype=float)
    v = np.linalg.solve(np.eye(m.n) - m.A, m.B)[:, 0]
    residuals = [float(np.max(np.abs(m.C[0] - a * (P @ v)))) for a in candidates]
    best = int(np.argmin(residuals))
    return float(candidates[best]), residuals


@dataclass
class DemoResult:
    model: StateSpaceModel
    zoh_error: float
    g1: float
    alpha: float
    alpha_residuals: list
    certificate: NICertificate
    certificate_report: CertificateReport
    empirical: Optional[EmpiricalNIResult]
    params: HigsParams
    design: DesignReport
    trace: ClosedLoopTrace
    analysis: TraceAnalysis
    stages: dict = field(default_factory=dict)
    reasons: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.stages.values())

    def summary(self) -> dict:
        return {
            "zoh_max_error": self.zoh_error,
            "g1": self.g1,
            "alpha": self.alpha,
            "alpha_residuals": self.alpha_residuals,
            "certificate": self.certificate_report.as_dict(),
            "empirical_ni": None
            if self.empirical is None
            else {"passed": self.empirical.passed, "worst_slack": self.empirical.worst_slack,
                  "trials": self.empirical.trials, "horizon": self.empirical.horizon},
            "higs": {"omega_h": self.params.omega_h, "k_h": self.params.k_h},
            "design": self.design.as_dict(),
            "analysis": self.analysis.as_dict(),
            "stages": dict(self.stages),
            "reasons": list(self.reasons),
            "passed": self.passed,
        }


def run_demo(
    omega_h: float = ms.OMEGA_H,
    k_h: float = ms.K_H,
    n_steps: int = ms.N_STEPS,
    tol: float = 1e-9,
    trials: int = 1000,
    horizon: int = 50,
    seed: int = 0,
) -> DemoResult:
    """Discretize, certify, check the design and simulate.

    Every stage runs even if an earlier one fails so the summary is complete.
    """
    m = ms.discrete_model()
    zoh_err = float(max(np.max(np.abs(m.A - ms.closed_form_A())), np.max(np.abs(m.B - ms.closed_form_B()))))
    g1 = transfer_eval(m, 1.0)
    alpha, residuals = resolve_storage_scale(m, ms.P_REFERENCE)
    cert = NICertificate(alpha * ms.P_REFERENCE)
    report = check_ni_certificate(m, cert, tol)
    emp = empirical_ni_test(m, cert, trials=trials, horizon=horizon, seed=seed) if trials > 0 else None
    p = HigsParams(omega_h, k_h)
    design = validate_design(m, cert, p, tol)
    trace = simulate(m, p, ms.X0, ms.XH0, n_steps, cert)
    analysis = analyze_trace(trace)

    stages = {
        "zoh": zoh_err <= 1e-9,
        "dc_gain": abs(g1 - ms.DC_GAIN) <= 1e-9,
        "certificate": report.verdict,
        "empirical_ni": emp is None or emp.passed,
        "design": design.verdict,
        "convergence": analysis.converged,
        "lyapunov": analysis.w_monotone_from is not None and analysis.w_monotone_from <= 1,
    }
    reasons = []
    if not stages["zoh"]:
        reasons.append(f"ZOH differs from the closed form by {zoh_err:.3e}")
    if not stages["dc_gain"]:
        reasons.append(f"G(1) = {g1!r}, expected 1.5")
    if not stages["certificate"]:
        reasons.append(f"certificate rejected: {report}")
    if not stages["empirical_ni"]:
        reasons.append(f"dissipation inequality violated (worst slack {emp.worst_slack:.3e})")
    if not stages["design"]:
        hypotheses = ("condition_omega", "condition_gain", "minimal", "det_ima_ok", "certificate_ok", "lyapunov_pd")
        failed = [k for k in hypotheses if not getattr(design, k)]
        reasons.append(f"design hypotheses fail: {', '.join(failed)} (k_h G(1) = {k_h * g1:.6g})")
    if not stages["convergence"]:
        reasons.append(
            f"did not converge: final state norm {analysis.final_norm:.6g} exceeds 1e-3 x initial norm "
            f"{analysis.initial_norm:.6g} after {len(trace)} steps"
        )
    if not stages["lyapunov"]:
        reasons.append(f"W increases after step 1 (max increase {analysis.max_w_increase!r})")
    return DemoResult(m, zoh_err, g1, alpha, residuals, cert, report, emp, p, design, trace, analysis, stages, reasons)
