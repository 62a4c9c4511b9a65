"""Threshold detectors preceded by loss, optionally upgraded by a displacement.

A detector with threshold ``theta`` and efficiency ``eta`` stays silent ("no
click", or "not seen" for the eye) when fewer than ``theta`` photons survive a
beamsplitter of transmission ``eta``. The human eye is ``DetectorSpec(7, 0.08)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq
from scipy.special import gammainc, gammaln

from .fock import FockOperator, displacement_matrix, log_binomial

__all__ = [
    "DetectorSpec",
    "BlochVector",
    "EYE",
    "no_click_prob_fock",
    "no_click_prob_derivative_form",
    "povm_ns_operator",
    "povm_s_operator",
    "seen_prob_coherent",
    "seen_crossing_nbar",
    "displaced_no_click_operator",
    "displaced_no_click_prob",
    "bloch_vector",
]


@dataclass(frozen=True)
class DetectorSpec:
    theta: int
    eta: float = 1.0

    def __post_init__(self):
        if int(self.theta) != self.theta or self.theta < 1:
            raise ValueError(f"threshold must be a positive integer, got {self.theta!r}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.eta!r}")
        object.__setattr__(self, "theta", int(self.theta))
        object.__setattr__(self, "eta", float(self.eta))

    def lossless(self) -> DetectorSpec:
        return DetectorSpec(self.theta, 1.0)


EYE = DetectorSpec(7, 0.08)


@dataclass(frozen=True, eq=False)
class BlochVector:
    """Qubit restriction ``M = offset * I + v . sigma`` of an observable on span{|0>, |1>}."""

    v: np.ndarray
    offset: float

    @property
    def x(self) -> float:
        return float(self.v[0])

    @property
    def y(self) -> float:
        return float(self.v[1])

    @property
    def z(self) -> float:
        return float(self.v[2])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.v))


def no_click_prob_fock(det: DetectorSpec, n):
    """Probability that ``|n>`` leaves fewer than ``theta`` photons after loss ``eta``.

    Vectorized over ``n``.
    """
    n = np.asarray(n)
    m = np.arange(det.theta).reshape((-1,) + (1,) * n.ndim)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_eta = math.log(det.eta)
        log_loss = math.log1p(-det.eta) if det.eta < 1 else -np.inf
        lost = n - m
        lw = log_binomial(n, m) + m * log_eta + np.where(lost <= 0, 0.0, lost * log_loss)
    total = np.exp(lw).sum(axis=0)
    total = np.minimum(total, 1.0)
    return float(total) if total.ndim == 0 else total


def no_click_prob_derivative_form(det: DetectorSpec, n: int) -> float:
    """Same probability from ``eta^theta/(theta-1)! * d^(theta-1)/dx^(theta-1) [x^n / (1-x)]``.

    ``x = 1 - eta``. The power ``x^n`` is differentiated exactly as a polynomial
    and combined with the closed-form derivatives of ``1/(1-x)`` by the Leibniz rule.
    """
    r = det.theta - 1
    eta = det.eta
    x = 1.0 - eta
    power = Polynomial.basis(n)
    total = 0.0
    for i in range(r + 1):
        d_power = power.deriv(i)(x) if i <= n else 0.0
        # d^j/dx^j (1-x)^(-1) = j! (1-x)^(-(j+1)), merged with the eta^theta prefactor
        j = r - i
        total += math.comb(r, i) * d_power * math.factorial(j) * eta ** (det.theta - j - 1)
    return total / math.factorial(r)


def povm_ns_operator(det: DetectorSpec, dim: int) -> FockOperator:
    return FockOperator(np.diag(no_click_prob_fock(det, np.arange(dim))), hermitian=True)


def povm_s_operator(det: DetectorSpec, dim: int) -> FockOperator:
    return FockOperator(np.eye(dim) - povm_ns_operator(det, dim).entries, hermitian=True)


def seen_prob_coherent(det: DetectorSpec, nbar):
    """Click probability for a coherent pulse of mean photon number ``nbar``.

    Poisson tail ``P(N >= theta)`` at mean ``eta * nbar``: the regularized
    incomplete gamma function above mean 30, direct summation below.
    """
    nbar = np.asarray(nbar, dtype=float)
    if np.any(nbar < 0):
        raise ValueError("nbar must be non-negative")
    mu = det.eta * nbar
    k = np.arange(det.theta).reshape((-1,) + (1,) * mu.ndim)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.exp(-mu + k * np.log(mu) - gammaln(k + 1))
    terms = np.where((k == 0) & (mu == 0), 1.0, terms)
    direct = 1.0 - terms.sum(axis=0)
    out = np.where(mu > 30, gammainc(det.theta, mu), direct)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def seen_crossing_nbar(det: DetectorSpec, level: float = 0.5) -> float:
    """Mean photon number at which ``seen_prob_coherent`` reaches ``level``."""
    hi = 1.0
    while seen_prob_coherent(det, hi) < level:
        hi *= 2
    return brentq(lambda nb: seen_prob_coherent(det, nb) - level, 0.0, hi, xtol=1e-13, rtol=1e-15)


def displaced_no_click_operator(
    det: DetectorSpec, alpha: complex, dim: int, tol: float = 1e-13
) -> FockOperator:
    """``D(alpha)^+ P_ns D(alpha)`` restricted to the lowest ``dim`` levels.

    The displacement is built on a padded space large enough that the neglected
    weight ``sum_{m >= N} P_ns(m) |<m|D|n>|^2`` stays below ``tol`` for every kept
    column. At unit efficiency ``P_ns`` projects onto ``m < theta`` and the
    result is exact.
    """
    alpha = complex(alpha)
    if det.eta == 1.0:
        N = max(det.theta, dim)
        D = displacement_matrix(alpha, N, check_cols=0).entries
        rows = D[: det.theta, :dim]
        return FockOperator(rows.conj().T @ rows, hermitian=True)
    x = abs(alpha) ** 2
    N = dim + math.ceil(x + 8 * math.sqrt(x * (2 * dim + 1))) + 16
    while True:
        D = displacement_matrix(alpha, N, check_cols=0).entries
        defect = 1.0 - np.sum(np.abs(D[:, :dim]) ** 2, axis=0).max()
        if no_click_prob_fock(det, N) * max(defect, 0.0) <= tol:
            break
        N = math.ceil(1.5 * N)
    p = no_click_prob_fock(det, np.arange(N))
    cols = D[:, :dim]
    op = cols.conj().T @ (p[:, None] * cols)
    return FockOperator((op + op.conj().T) / 2, hermitian=True)


def displaced_no_click_prob(det: DetectorSpec, beta: complex, n, dim: int | None = None):
    """``P(+1 | beta, |n>)``: no-click probability of ``|n>`` displaced by ``beta``.

    Vectorized over ``n``; ``dim`` defaults to just enough levels to hold ``n``.
    """
    n_arr = np.asarray(n)
    need = int(n_arr.max()) + 1
    dim = need if dim is None else dim
    if dim < need:
        raise ValueError(f"dim={dim} cannot hold |{need - 1}>")
    op = displaced_no_click_operator(det, beta, dim)
    vals = np.clip(np.real(np.diagonal(op.entries))[n_arr], 0.0, 1.0)
    return float(vals) if vals.ndim == 0 else vals


def bloch_vector(det: DetectorSpec, alpha: complex, dim: int = 2) -> BlochVector:
    """Bloch decomposition of ``D(alpha)^+ (2 P_ns - 1) D(alpha)`` on span{|0>, |1>}."""
    M = 2 * displaced_no_click_operator(det, alpha, max(dim, 2)).entries[:2, :2] - np.eye(2)
    v = np.array([M[0, 1].real, -M[0, 1].imag, 0.5 * (M[0, 0] - M[1, 1]).real])
    return BlochVector(v, float(0.5 * (M[0, 0] + M[1, 1]).real))
