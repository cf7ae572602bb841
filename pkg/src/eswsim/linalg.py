"""Dense complex linear algebra for small Hilbert spaces.

Kets are 1-D complex arrays and operators are square 2-D complex arrays.
Composite spaces follow the ``K (x) C^2`` reading order: the spatial factor is
the slow index and the ancilla the fast one, so composite index ``i*dim(b)+k``
pairs ``a``-index ``i`` with ``b``-index ``k``.

All residuals are Frobenius norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

DEFAULT_TOL = 1e-12

ComplexArray = npt.NDArray[np.complex128]


class DimensionError(ValueError):
    """Operands live in spaces of different dimension."""


@dataclass(frozen=True)
class ResidualReport:
    """A named Frobenius residual compared against a tolerance."""

    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.value <= self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tol": self.tol, "pass": self.passed}


def as_ket(amp) -> ComplexArray:
    """Validate and copy ``amp`` into an immutable complex vector."""
    v = np.array(amp, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"ket must be a non-empty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("ket amplitudes must be finite")
    v.setflags(write=False)
    return v


def as_operator(entries) -> ComplexArray:
    """Validate and copy ``entries`` into an immutable square complex matrix."""
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"operator must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator entries must be finite")
    m.setflags(write=False)
    return m


def _same_dim(*arrays: np.ndarray) -> int:
    dims = {a.shape[0] for a in arrays}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def basis_ket(dim: int, index: int) -> ComplexArray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return as_ket(v)


def identity(dim: int) -> ComplexArray:
    return as_operator(np.eye(dim))


def tensor_operator(a, b) -> ComplexArray:
    return as_operator(np.kron(as_operator(a), as_operator(b)))


def tensor_ket(u, v) -> ComplexArray:
    return as_ket(np.kron(as_ket(u), as_ket(v)))


def adjoint(a) -> ComplexArray:
    return as_operator(np.conj(as_operator(a)).T)


def commutator(a, b) -> ComplexArray:
    """Return ``ab - ba``."""
    a, b = as_operator(a), as_operator(b)
    _same_dim(a, b)
    return as_operator(a @ b - b @ a)


def inner(u, v) -> complex:
    """``<u|v>``, conjugate-linear in ``u``."""
    u, v = as_ket(u), as_ket(v)
    _same_dim(u, v)
    return complex(np.vdot(u, v))


def outer(u, v) -> ComplexArray:
    """The dyad ``|u><v|``."""
    u, v = as_ket(u), as_ket(v)
    _same_dim(u, v)
    return as_operator(np.outer(u, np.conj(v)))


def apply(a, u) -> ComplexArray:
    a, u = as_operator(a), as_ket(u)
    _same_dim(a, u)
    return as_ket(a @ u)


def norm(u) -> float:
    return float(np.linalg.norm(as_ket(u)))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), "fro"))


def is_projection(p, tol: float = DEFAULT_TOL) -> tuple[ResidualReport, ResidualReport]:
    """Hermiticity and idempotence residuals of ``p``.

    Returns ``(hermiticity, idempotence)``; ``p`` is a projection at ``tol``
    when both pass.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    p = as_operator(p)
    herm = frobenius_norm(p - p.conj().T)
    idem = frobenius_norm(p @ p - p)
    return ResidualReport("hermiticity", herm, tol), ResidualReport("idempotence", idem, tol)
