"""Displaced +/-1 observables and the phase-randomized two-mode witness.

Each party displaces its mode, then reports +1 for "no click" (or "not seen")
and -1 otherwise. A common random phase on both displacements is averaged out,
which kills every matrix element connecting different total photon numbers.
The average is done exactly by masking those blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detectors import DetectorSpec, displaced_no_click_operator
from .errors import DimensionError
from .fock import FockOperator, TwoModeState

__all__ = [
    "WITNESS_KEYS",
    "SigmaObservable",
    "WitnessMatrix",
    "sigma_observable",
    "witness_matrix",
    "witness_expectation",
    "witness_elements",
    "total_number_mask",
]

# (i, j, k, l) labels of <ij|W|kl> used by the separability bounds
WITNESS_KEYS = (
    (0, 0, 0, 0),
    (0, 1, 0, 1),
    (1, 0, 1, 0),
    (1, 1, 1, 1),
    (0, 1, 1, 0),
    (1, 1, 2, 0),
    (1, 1, 0, 2),
)


@dataclass(frozen=True, eq=False)
class SigmaObservable:
    op: FockOperator
    det: DetectorSpec | None = None
    alpha: complex = 0.0

    @property
    def dim(self) -> int:
        return self.op.dim


def sigma_observable(det: DetectorSpec, alpha: complex, dim: int) -> SigmaObservable:
    """``D(alpha)^+ (2 P_ns - 1) D(alpha)`` on the lowest ``dim`` levels."""
    P = displaced_no_click_operator(det, alpha, dim).entries
    op = 2 * P - np.eye(dim)
    return SigmaObservable(FockOperator(op, hermitian=True), det, complex(alpha))


def total_number_mask(dim: int) -> np.ndarray:
    """Boolean ``(dim^2, dim^2)`` mask, True where ``i + j == k + l``."""
    n = np.add.outer(np.arange(dim), np.arange(dim)).ravel()
    return n[:, None] == n[None, :]


@dataclass(frozen=True, eq=False)
class WitnessMatrix:
    op: FockOperator
    elements: dict

    @property
    def dim(self) -> int:
        return self.op.dim

    def element(self, i: int, j: int, k: int, l: int) -> complex:
        d = self.dim
        return complex(self.op.entries[i * d + j, k * d + l])


def _as_operator(x) -> FockOperator:
    if isinstance(x, SigmaObservable):
        return x.op
    if isinstance(x, FockOperator):
        return x
    return FockOperator(np.asarray(x), hermitian=True)


def witness_matrix(sig_a, sig_b) -> WitnessMatrix:
    """Phase-averaged ``sigma_A (x) sigma_B``.

    ``sig_a``/``sig_b`` may be :class:`SigmaObservable` instances or plain
    single-mode operators (e.g. ideal Pauli matrices embedded in Fock space).
    """
    A, B = _as_operator(sig_a), _as_operator(sig_b)
    if A.dim != B.dim:
        raise DimensionError(f"observable dims differ: {A.dim} vs {B.dim}")
    d = A.dim
    W = np.kron(A.entries, B.entries)
    W[~total_number_mask(d)] = 0.0
    W = 0.5 * (W + W.conj().T)
    elements = {}
    for i, j, k, l in WITNESS_KEYS:
        if max(i, j, k, l) < d:
            elements[(i, j, k, l)] = complex(W[i * d + j, k * d + l])
    return WitnessMatrix(FockOperator(W, hermitian=True, modes=2), elements)


def witness_expectation(W: WitnessMatrix, rho: TwoModeState, imag_tol: float = 1e-9) -> float:
    if W.dim != rho.dim:
        raise DimensionError(f"witness dim {W.dim} differs from state dim {rho.dim}")
    val = complex(np.sum(W.op.entries * rho.entries.T))
    if abs(val.imag) > imag_tol * max(1.0, abs(val.real)):
        raise ValueError(f"witness expectation has imaginary residue {val.imag:.3e}")
    return val.real


def witness_elements(W: WitnessMatrix) -> dict:
    """The cached ``<ij|W|kl>`` elements keyed by ``(i, j, k, l)``."""
    return dict(W.elements)

