"""Two-slit models on ``K (x) C^2``.

The ancilla basis is ordered ``index 0 <-> |0>``, ``index 1 <-> |1>``; the
which-slit detector is therefore ``T = 1 (x) diag(0, 1)``. Spatial basis
vectors are the standard basis of ``K``.

The dynamics is never built explicitly. Every operator the package builds on
the composite space is either ``X (x) 1`` or ``1 (x) R``, which is all that a
Hamiltonian of the form ``H_K (x) 1`` (no ancilla coupling) requires.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import linalg as la
from .linalg import DEFAULT_TOL, ComplexArray

ANCILLA_DIM = 2
KET_0 = la.basis_ket(2, 0)
KET_1 = la.basis_ket(2, 1)

# Rows of L+ in the psi-basis, in quarters. Row k is the bra that multiplies
# |psi_k> in the dyads A, B, C, D.
LPLUS_QUARTERS = (
    (3, 1, -1, 1),
    (1, 3, 1, -1),
    (-1, 1, 1, -1),
    (1, -1, -1, 1),
)
LPLUS_RATIONAL = tuple(tuple(Fraction(q, 4) for q in row) for row in LPLUS_QUARTERS)


class ModelError(ValueError):
    """A model config could not be parsed."""


class InvariantViolation(ModelError):
    """A model failed one of its structural checks."""

    def __init__(self, message: str, residual: la.ResidualReport | None = None):
        super().__init__(message)
        self.residual = residual


def detector_projection(dim_k: int) -> ComplexArray:
    """``1 (x) |1><1|``."""
    return la.tensor_operator(la.identity(dim_k), la.outer(KET_1, KET_1))


def embed_spatial(lx, dim_k: int) -> ComplexArray:
    """Lift a spatial operator to ``lx (x) 1``."""
    lx = la.as_operator(lx)
    if lx.shape[0] != dim_k:
        raise la.DimensionError(f"operator has dim {lx.shape[0]}, expected dim_K={dim_k}")
    return la.tensor_operator(lx, la.identity(ANCILLA_DIM))


def embed_ancilla(r, dim_k: int) -> ComplexArray:
    """Lift an ancilla operator to ``1 (x) r``."""
    r = la.as_operator(r)
    if r.shape[0] != ANCILLA_DIM:
        raise la.DimensionError(f"ancilla operator must be 2x2, got {r.shape}")
    return la.tensor_operator(la.identity(dim_k), r)


def lplus_dyads(basis=None) -> dict[str, ComplexArray]:
    """The four dyadic pieces ``A, B, C, D`` of ``L+``.

    ``basis`` is an orthonormal frame ``psi_1..psi_4``; defaults to the
    standard basis of ``C^4``.
    """
    if basis is None:
        basis = [la.basis_ket(4, k) for k in range(4)]
    psi = [la.as_ket(b) for b in basis]
    dyads = {}
    for name, row in zip("ABCD", LPLUS_RATIONAL):
        bra = sum(float(c) * np.conj(p) for c, p in zip(row, psi))
        # |psi_k><bra| with the bra already conjugated
        dyads[name] = la.as_operator(np.outer(psi["ABCD".index(name)], bra))
    return dyads


def build_lplus(basis=None) -> ComplexArray:
    """``L+ = A + B + C + D``, cross-checked against the literal matrix."""
    dyads = lplus_dyads(basis)
    assembled = dyads["A"] + dyads["B"] + dyads["C"] + dyads["D"]
    if basis is None:
        literal = np.array(LPLUS_RATIONAL, dtype=float)
        gap = np.max(np.abs(assembled - literal))
        if gap > 1e-15:
            raise InvariantViolation(f"dyad sum differs from literal L+ by {gap:.3e}")
    return la.as_operator(assembled)


@dataclass(frozen=True)
class TwoSlitModel:
    """Operators and state for one two-slit model.

    ``spatial_basis`` maps labels (``psi1``, ``psi0`` or ``psi1``..``psi4``)
    to kets of ``K``. ``screen_events`` holds composite projections loaded
    from a config; the built-in models carry none.
    """

    name: str
    dim_K: int
    L: ComplexArray
    E: ComplexArray
    T: ComplexArray
    Psi: ComplexArray
    spatial_basis: dict[str, ComplexArray] = field(default_factory=dict)
    Lplus: ComplexArray | None = None
    Eplus: ComplexArray | None = None
    screen_events: tuple[ComplexArray, ...] = ()
    tolerance: float = DEFAULT_TOL

    ancilla_dim = ANCILLA_DIM

    @property
    def composite_dim(self) -> int:
        return self.dim_K * ANCILLA_DIM

    def projections(self) -> dict[str, ComplexArray]:
        ops = {"L": self.L, "E": self.E, "T": self.T}
        if self.Lplus is not None:
            ops["Lplus"] = self.Lplus
            ops["Eplus"] = self.Eplus
        for i, f in enumerate(self.screen_events):
            ops[f"F{i}"] = f
        return ops

    def residuals(self, tol: float | None = None) -> list[la.ResidualReport]:
        """Every structural residual: projection checks and state norm."""
        tol = self.tolerance if tol is None else tol
        out = []
        for name, op in self.projections().items():
            herm, idem = la.is_projection(op, tol)
            out.append(la.ResidualReport(f"{name}.hermiticity", herm.value, tol))
            out.append(la.ResidualReport(f"{name}.idempotence", idem.value, tol))
        out.append(la.ResidualReport("Psi.norm", abs(la.norm(self.Psi) - 1.0), tol))
        return out

    def validate(self, tol: float | None = None) -> None:
        for r in self.residuals(tol):
            if not r.passed:
                raise InvariantViolation(
                    f"{self.name}: {r.name} residual {r.value:.3e} exceeds tol {r.tol:.1e}", r
                )

    def with_state(self, psi) -> TwoSlitModel:
        psi = la.as_ket(psi)
        if psi.shape[0] != self.composite_dim:
            raise la.DimensionError("state dimension does not match the model")
        return replace(self, Psi=psi)


def _assemble(name, dim_k, L, psi, basis, Lplus=None, T=None, screen_events=(), tol=DEFAULT_TOL):
    model = TwoSlitModel(
        name=name,
        dim_K=dim_k,
        L=la.as_operator(L),
        E=embed_spatial(L, dim_k),
        T=detector_projection(dim_k) if T is None else la.as_operator(T),
        Psi=la.as_ket(psi),
        spatial_basis=basis,
        Lplus=None if Lplus is None else la.as_operator(Lplus),
        Eplus=None if Lplus is None else embed_spatial(Lplus, dim_k),
        screen_events=tuple(la.as_operator(f) for f in screen_events),
        tolerance=tol,
    )
    for op in model.projections().values():
        if op.shape[0] not in (dim_k, 2 * dim_k):
            raise la.DimensionError(f"operator of dim {op.shape[0]} in a dim_K={dim_k} model")
    if model.Psi.shape[0] != 2 * dim_k:
        raise la.DimensionError(f"state has length {model.Psi.shape[0]}, expected {2 * dim_k}")
    return model


def build_simple_model() -> TwoSlitModel:
    """``Psi = (psi1 (x) |1> + psi0 (x) |0>)/sqrt 2`` with ``L = |psi1><psi1|``."""
    psi1, psi0 = la.basis_ket(2, 0), la.basis_ket(2, 1)
    state = (la.tensor_ket(psi1, KET_1) + la.tensor_ket(psi0, KET_0)) / np.sqrt(2)
    model = _assemble(
        "simple",
        2,
        la.outer(psi1, psi1),
        state,
        {"psi1": psi1, "psi0": psi0},
    )
    model.validate()
    return model


def build_four_mode_model() -> TwoSlitModel:
    """Four orthogonal slit modes, ``L = P1 + P2`` and the ``L+`` projection.

    ``Psi = ((psi1 + psi2) (x) |1> + (psi3 + psi4) (x) |0>) / 2``.
    """
    psi = [la.basis_ket(4, k) for k in range(4)]
    P = [la.outer(p, p) for p in psi]
    state = (la.tensor_ket(psi[0] + psi[1], KET_1) + la.tensor_ket(psi[2] + psi[3], KET_0)) / 2
    model = _assemble(
        "four-mode",
        4,
        P[0] + P[1],
        state,
        {f"psi{k + 1}": p for k, p in enumerate(psi)},
        Lplus=build_lplus(),
    )
    model.validate()
    return model


def mode_projectors(model: TwoSlitModel) -> list[ComplexArray]:
    """``P_k = |psi_k><psi_k|`` for every labelled spatial basis vector."""
    return [la.outer(v, v) for v in model.spatial_basis.values()]


BUILTINS = {"simple": build_simple_model, "four-mode": build_four_mode_model}


# --- config serialization -------------------------------------------------

SPATIAL_OPERATORS = ("L", "Lplus")
COMPOSITE_OPERATORS = ("T", "F")


def _encode(arr) -> list:
    a = np.asarray(arr)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _decode(obj, shape: tuple[int, ...], what: str) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{what}: entries must be [re, im] number pairs") from exc
    if a.shape != (*shape, 2):
        raise ModelError(f"{what}: expected shape {shape} of [re, im] pairs, got {a.shape[:-1]}")
    if not np.all(np.isfinite(a)):
        raise ModelError(f"{what}: entries must be finite")
    return a[..., 0] + 1j * a[..., 1]


def model_to_config(model: TwoSlitModel) -> dict:
    ops = {"L": _encode(model.L), "T": _encode(model.T)}
    if model.Lplus is not None:
        ops["Lplus"] = _encode(model.Lplus)
    if model.screen_events:
        ops["F"] = [_encode(f) for f in model.screen_events]
    return {
        "dim_K": model.dim_K,
        "state": _encode(model.Psi),
        "operators": ops,
        "tolerance": model.tolerance,
    }


def dump_model(model: TwoSlitModel) -> str:
    return json.dumps(model_to_config(model), indent=2)


def parse_model(text: str, *, check: bool = True, tol: float | None = None) -> TwoSlitModel:
    """Load a model from its JSON config.

    ``F`` may hold one composite matrix or a list of them. With ``check`` the
    loaded model is validated and :class:`InvariantViolation` names the first
    failing residual.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelError("config must be a JSON object")
    for key in ("dim_K", "state", "operators"):
        if key not in doc:
            raise ModelError(f"missing field {key!r}")
    dim_k = doc["dim_K"]
    if not isinstance(dim_k, int) or isinstance(dim_k, bool) or dim_k < 1:
        raise ModelError("dim_K must be a positive integer")
    tolerance = doc.get("tolerance", DEFAULT_TOL)
    if not isinstance(tolerance, (int, float)) or tolerance < 0:
        raise ModelError("tolerance must be a nonnegative number")
    ops = doc["operators"]
    if not isinstance(ops, dict) or "L" not in ops:
        raise ModelError("operators must be an object containing at least 'L'")
    unknown = set(ops) - set(SPATIAL_OPERATORS) - set(COMPOSITE_OPERATORS)
    if unknown:
        raise ModelError(f"unknown operators: {sorted(unknown)}")

    n = 2 * dim_k
    state = _decode(doc["state"], (n,), "state")
    L = _decode(ops["L"], (dim_k, dim_k), "operators.L")
    Lplus = _decode(ops["Lplus"], (dim_k, dim_k), "operators.Lplus") if "Lplus" in ops else None
    T = _decode(ops["T"], (n, n), "operators.T") if "T" in ops else None
    events = []
    if "F" in ops:
        items = ops["F"] if _depth(ops["F"]) == 4 else [ops["F"]]
        events = [_decode(f, (n, n), f"operators.F[{i}]") for i, f in enumerate(items)]

    model = _assemble(
        "config", dim_k, L, state, {}, Lplus=Lplus, T=T, screen_events=events, tol=float(tolerance)
    )
    if check:
        model.validate(tol)
    return model


def _depth(obj) -> int:
    d = 0
    while isinstance(obj, list) and obj:
        obj = obj[0]
        d += 1
    return d


def indicator_events(dim_k: int, max_subsets: int = 256) -> list[ComplexArray]:
    """Screen-type events ``D (x) 1`` with ``D`` a diagonal 0/1 indicator on ``K``.

    All nontrivial subsets of the spatial basis when there are at most
    ``max_subsets`` of them, otherwise the single-element indicators.
    """
    n_subsets = 2**dim_k - 2
    if n_subsets <= max_subsets:
        masks = [[(m >> j) & 1 for j in range(dim_k)] for m in range(1, 2**dim_k - 1)]
    else:
        masks = np.eye(dim_k, dtype=int).tolist()
    return [embed_spatial(np.diag(m).astype(complex), dim_k) for m in masks]
