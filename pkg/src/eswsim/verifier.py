"""Checks for non-disturbing ESW detectors.

A projection ``T+`` is a non-disturbing ESW detector for ``E+`` in state
``Psi`` when it commutes with every screen event ``F``, commutes with ``E+``,
and ``T+ Psi = E+ Psi``. Every check returns the raw residuals so callers can
pin numbers, not only verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .linalg import DEFAULT_TOL, ResidualReport
from .model import ANCILLA_DIM, TwoSlitModel, embed_ancilla

INCOMPATIBILITY_THRESHOLD = 1e-6


class NotAProjectionError(ValueError):
    def __init__(self, operand: str, residual: ResidualReport):
        super().__init__(
            f"{operand} is not a projection: {residual.name} residual "
            f"{residual.value:.3e} exceeds tol {residual.tol:.1e}"
        )
        self.operand = operand
        self.residual = residual


@dataclass(frozen=True)
class DetectorCheckReport:
    commutes_with_F: tuple[ResidualReport, ...]
    commutes_with_target: ResidualReport
    correlation: ResidualReport
    tol: float

    @property
    def correlation_residual(self) -> float:
        return self.correlation.value

    @property
    def residuals(self) -> tuple[ResidualReport, ...]:
        return (*self.commutes_with_F, self.commutes_with_target, self.correlation)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.residuals)

    def to_dict(self) -> dict:
        return {
            "commutes_with_F": [r.to_dict() for r in self.commutes_with_F],
            "commutes_with_target": self.commutes_with_target.to_dict(),
            "correlation_residual": self.correlation.value,
            "tol": self.tol,
            "verdict": "pass" if self.passed else "fail",
        }


@dataclass(frozen=True)
class IncompatibilityReport:
    commutator_norm: float
    threshold: float

    @property
    def incompatible(self) -> bool:
        return self.commutator_norm > self.threshold

    def to_dict(self) -> dict:
        return {
            "commutator_norm": self.commutator_norm,
            "threshold": self.threshold,
            "incompatible": self.incompatible,
        }


@dataclass(frozen=True)
class CorrelationChainReport:
    residual_E_T: float
    residual_T_Eplus: float
    probability: float
    tol: float = DEFAULT_TOL

    @property
    def passed(self) -> bool:
        return self.residual_E_T <= self.tol and self.residual_T_Eplus <= self.tol

    def to_dict(self) -> dict:
        return {
            "residual_E_T": self.residual_E_T,
            "residual_T_Eplus": self.residual_T_Eplus,
            "probability": self.probability,
            "tol": self.tol,
            "verdict": "pass" if self.passed else "fail",
        }


def _require_projection(name: str, op, tol: float) -> None:
    for r in la.is_projection(op, tol):
        if not r.passed:
            raise NotAProjectionError(name, r)


def check_esw_detector(t_plus, e_plus, screen_events, psi, tol: float = DEFAULT_TOL) -> DetectorCheckReport:
    """Evaluate the Definition for detector ``t_plus`` and target ``e_plus``.

    Raises :class:`NotAProjectionError` when either operand fails the
    projection check at ``tol``.
    """
    t_plus, e_plus, psi = la.as_operator(t_plus), la.as_operator(e_plus), la.as_ket(psi)
    _require_projection("T+", t_plus, tol)
    _require_projection("E+", e_plus, tol)
    if psi.shape[0] != t_plus.shape[0]:
        raise la.DimensionError("state and operators have different dimensions")
    f_reports = tuple(
        ResidualReport(f"[T+,F{i}]", la.frobenius_norm(la.commutator(t_plus, f)), tol)
        for i, f in enumerate(screen_events)
    )
    target = ResidualReport("[T+,E+]", la.frobenius_norm(la.commutator(t_plus, e_plus)), tol)
    corr = ResidualReport("T+Psi-E+Psi", float(np.linalg.norm(t_plus @ psi - e_plus @ psi)), tol)
    return DetectorCheckReport(f_reports, target, corr, tol)


def check_direct_correlation(t, e, psi, tol: float = DEFAULT_TOL) -> tuple[ResidualReport, ResidualReport, ResidualReport]:
    """``[T, E]``, ``T Psi - E Psi`` and the complementary ``(1-T)Psi - (1-E)Psi``.

    The third residual equals the second up to rounding; it is reported so
    the outcome-0 half of the correlation is visible in reports.
    """
    t, e, psi = la.as_operator(t), la.as_operator(e), la.as_ket(psi)
    la._same_dim(t, e, psi)
    comm = ResidualReport("[T,E]", la.frobenius_norm(la.commutator(t, e)), tol)
    corr = ResidualReport("TPsi-EPsi", float(np.linalg.norm(t @ psi - e @ psi)), tol)
    eye = np.eye(t.shape[0])
    comp = ResidualReport(
        "(1-T)Psi-(1-E)Psi", float(np.linalg.norm((eye - t) @ psi - (eye - e) @ psi)), tol
    )
    return comm, corr, comp


def check_incompatibility(e_plus, e, threshold: float = INCOMPATIBILITY_THRESHOLD) -> IncompatibilityReport:
    return IncompatibilityReport(la.frobenius_norm(la.commutator(e_plus, e)), threshold)


def check_correlation_chain(model: TwoSlitModel, tol: float = DEFAULT_TOL) -> CorrelationChainReport:
    """Residuals of ``E Psi = T Psi = E+ Psi`` and the branch weight ``||T Psi||^2``."""
    if model.Eplus is None:
        raise ValueError(f"model {model.name!r} has no Eplus")
    psi = model.Psi
    t_psi = model.T @ psi
    return CorrelationChainReport(
        residual_E_T=float(np.linalg.norm(model.E @ psi - t_psi)),
        residual_T_Eplus=float(np.linalg.norm(t_psi - model.Eplus @ psi)),
        probability=float(np.vdot(t_psi, t_psi).real),
        tol=tol,
    )


@dataclass(frozen=True)
class SynthesisResult:
    R: np.ndarray
    report: DetectorCheckReport = field(repr=False)

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.R).real))


def _hermitian_from_params(p) -> np.ndarray:
    a, b, c, d = p
    return np.array([[a, b - 1j * c], [b + 1j * c, d]])


def _solve_hermitian(psi_mat: np.ndarray, target_mat: np.ndarray) -> np.ndarray:
    """Least-squares Hermitian ``R`` with ``psi_mat @ R.T ~ target_mat``.

    ``psi_mat[k, a]`` are the amplitudes of ``Psi`` with spatial index ``k``
    and ancilla index ``a``; ``(1 (x) R) Psi`` reshapes to ``psi_mat @ R.T``.
    """
    basis = [_hermitian_from_params(np.eye(4)[i]) for i in range(4)]
    cols = [(psi_mat @ h.T).ravel() for h in basis]
    a = np.stack(cols, axis=1)
    rhs = target_mat.ravel()
    a_real = np.concatenate([a.real, a.imag])
    rhs_real = np.concatenate([rhs.real, rhs.imag])
    params, *_ = np.linalg.lstsq(a_real, rhs_real, rcond=None)
    return _hermitian_from_params(params)


def _nearest_rank_one(h: np.ndarray) -> np.ndarray:
    _, vecs = np.linalg.eigh(h)
    top = vecs[:, -1]
    return np.outer(top, top.conj())


def _rank_one_candidates(psi_mat: np.ndarray, target_mat: np.ndarray) -> list[np.ndarray]:
    h = _solve_hermitian(psi_mat, target_mat)
    cands = [_nearest_rank_one(h)]
    # Underdetermined systems return the minimum-norm solution, which need not
    # be near a projector; the eigenframes of h and of the ancilla's reduced
    # state cover the degenerate cases.
    for mat in (h, psi_mat.conj().T @ psi_mat):
        _, vecs = np.linalg.eigh(mat)
        cands.extend(np.outer(v, v.conj()) for v in vecs.T)
    return cands


def _drop_roundoff(r: np.ndarray) -> np.ndarray:
    r = np.where(np.abs(r) < 1e-15, 0.0, r)
    return r


def synthesize_detectors(e_plus, psi, screen_events=(), tol: float = DEFAULT_TOL) -> list[SynthesisResult]:
    """All ancilla projections ``R`` such that ``1 (x) R`` detects ``e_plus``.

    Candidates are ``0``, ``I`` and rank-one projectors obtained from the
    linear constraint ``(1 (x) R) Psi = E+ Psi``; each is re-verified with
    :func:`check_esw_detector` and near-duplicates are merged. Results are
    ordered by rank, then by entries.
    """
    e_plus, psi = la.as_operator(e_plus), la.as_ket(psi)
    n = e_plus.shape[0]
    if n % ANCILLA_DIM or psi.shape[0] != n:
        raise la.DimensionError("expected operators on K (x) C^2")
    dim_k = n // ANCILLA_DIM
    psi_mat = psi.reshape(dim_k, ANCILLA_DIM)
    target_mat = (e_plus @ psi).reshape(dim_k, ANCILLA_DIM)

    candidates = [np.zeros((2, 2)), np.eye(2)]
    candidates += _rank_one_candidates(psi_mat, target_mat)

    found: list[SynthesisResult] = []
    for r in candidates:
        r = _drop_roundoff(np.asarray(r, dtype=complex))
        if any(np.linalg.norm(r - f.R) <= max(tol, 1e-12) for f in found):
            continue
        report = check_esw_detector(embed_ancilla(r, dim_k), e_plus, screen_events, psi, tol)
        if report.passed:
            found.append(SynthesisResult(la.as_operator(r), report))
    found.sort(key=lambda s: (s.rank, tuple(np.round(s.R.real.ravel(), 12)), tuple(np.round(s.R.imag.ravel(), 12))))
    return found


def complement(op) -> np.ndarray:
    op = la.as_operator(op)
    return la.as_operator(np.eye(op.shape[0]) - op)
