"""Truncated Fock-space linear algebra for one and two bosonic modes.

Everything is dense and double-precision complex. Level ``k`` of a mode is
stored at index ``k``; two-mode objects use the lexicographic ``|n_A, n_B>``
ordering, i.e. flat index ``n_A * dim + n_B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DimensionError, TruncationError

TAIL_TOL = 1e-10
HERMITIAN_TOL = 1e-10

__all__ = [
    "TAIL_TOL",
    "FockVector",
    "FockOperator",
    "TwoModeState",
    "default_dim",
    "log_binomial",
    "fock_state",
    "coherent_state",
    "displacement_matrix",
    "thermal_state",
    "loss_channel",
    "split_single_mode",
    "tensor",
    "expectation",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def log_binomial(n, k):
    """``log C(n, k)`` for array-like non-negative integers, ``-inf`` outside ``0 <= k <= n``."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    valid = (k >= 0) & (k <= n)
    with np.errstate(invalid="ignore"):
        out = gammaln(n + 1) - gammaln(k + 1) - gammaln(np.where(valid, n - k, 0) + 1)
    return np.where(valid, out, -np.inf)


def default_dim(amp_sq_max: float = 0.0, nbar_max: float = 0.0) -> int:
    """Truncation large enough for displaced thermal-like states of the given size."""
    return max(32, math.ceil(6 * (amp_sq_max + nbar_max + 1)))


@dataclass(frozen=True, eq=False)
class FockVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size < 1:
            raise DimensionError("FockVector needs a non-empty 1-D amplitude array")
        if np.vdot(amps, amps).real > 1 + 1e-9:
            raise ValueError("FockVector norm exceeds 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm_deficit(self) -> float:
        return 1.0 - float(np.vdot(self.amplitudes, self.amplitudes).real)

    def projector(self) -> FockOperator:
        a = self.amplitudes
        return FockOperator(np.outer(a, a.conj()), hermitian=True)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense operator on ``modes`` identical truncated modes of ``dim`` levels each."""

    entries: np.ndarray
    hermitian: bool = False
    modes: int = 1
    truncation_deficit: float = 0.0

    def __post_init__(self):
        e = _frozen(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise DimensionError("operator entries must be a square matrix")
        d = round(e.shape[0] ** (1.0 / self.modes))
        if d**self.modes != e.shape[0]:
            raise DimensionError(f"size {e.shape[0]} is not a {self.modes}-mode product space")
        if self.hermitian and not np.allclose(e, e.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("entries flagged Hermitian are not")
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return round(self.entries.shape[0] ** (1.0 / self.modes))

    def dag(self) -> FockOperator:
        return FockOperator(self.entries.conj().T, self.hermitian, self.modes)

    def block(self, dim: int) -> FockOperator:
        """Restriction to the lowest ``dim`` levels (single mode only)."""
        if self.modes != 1:
            raise DimensionError("block() is defined for single-mode operators")
        if dim > self.dim:
            raise DimensionError(f"cannot take a {dim}-level block of a {self.dim}-level operator")
        return FockOperator(self.entries[:dim, :dim], self.hermitian)


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Density matrix of modes A and B, each truncated to ``dim`` levels."""

    entries: np.ndarray
    truncation_deficit: float = field(default=0.0)

    def __post_init__(self):
        e = _frozen(self.entries)
        d = math.isqrt(e.shape[0]) if e.ndim == 2 else 0
        if e.ndim != 2 or e.shape[0] != e.shape[1] or d * d != e.shape[0]:
            raise DimensionError("two-mode state must be a (dim**2, dim**2) matrix")
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return math.isqrt(self.entries.shape[0])

    def tensor4(self) -> np.ndarray:
        """View as ``rho[a, b, a', b'] = <a b| rho |a' b'>``."""
        d = self.dim
        return self.entries.reshape(d, d, d, d)

    def photon_distribution(self) -> np.ndarray:
        """Joint photon-number probabilities ``p[n_A, n_B]``."""
        d = self.dim
        return np.real(np.diagonal(self.entries)).reshape(d, d).copy()

    def marginal(self, mode: str) -> FockOperator:
        t = self.tensor4()
        if mode == "A":
            red = np.einsum("ajbj->ab", t)
        elif mode == "B":
            red = np.einsum("iaib->ab", t)
        else:
            raise ValueError("mode must be 'A' or 'B'")
        return FockOperator(red, hermitian=True)

    def check(self, tol: float = 1e-9) -> None:
        """Raise ``ValueError`` unless the state has unit trace and is positive within ``tol``."""
        e = self.entries
        if abs(np.trace(e).real - 1.0) > tol + self.truncation_deficit:
            raise ValueError(f"trace {np.trace(e).real!r} is not 1")
        if not np.allclose(e, e.conj().T, atol=tol, rtol=0):
            raise ValueError("state is not Hermitian")
        if np.linalg.eigvalsh(e).min() < -tol:
            raise ValueError("state is not positive semidefinite")


def fock_state(n: int, dim: int) -> FockVector:
    if not 0 <= n < dim:
        raise DimensionError(f"|{n}> does not fit in {dim} levels")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return FockVector(v)


def coherent_state(alpha: complex, dim: int) -> FockVector:
    """Truncated ``|alpha>``; the dropped tail shows up as ``norm_deficit``."""
    k = np.arange(dim)
    x = abs(alpha) ** 2
    if alpha == 0:
        return fock_state(0, dim)
    log_mag = -x / 2 + k * math.log(abs(alpha)) - 0.5 * gammaln(k + 1)
    amps = np.exp(log_mag) * np.exp(1j * k * np.angle(alpha))
    return FockVector(amps)


def _displacement_magnitudes(x: float, dim: int) -> np.ndarray:
    """``S[m, n] = sqrt(n!/m!) |alpha|^(m-n) e^(-x/2) L_n^(m-n)(x)`` for ``m >= n``.

    Laguerre values run through the forward three-term recurrence in ``n`` for
    every order ``k = m - n`` at once, carrying a per-order log scale so that
    neither the polynomials nor the prefactors overflow.
    """
    S = np.zeros((dim, dim))
    k = np.arange(dim, dtype=float)
    log_amp = 0.5 * math.log(x)
    prev = np.zeros(dim)
    cur = np.ones(dim)
    log_scale = np.zeros(dim)
    for n in range(dim):
        if n == 1:
            prev, cur = cur, 1.0 + k - x
        elif n > 1:
            nxt = ((2 * n - 1 + k - x) * cur - (n - 1 + k) * prev) / n
            prev, cur = cur, nxt
        big = np.abs(cur) > 1e150
        if big.any():
            cur = np.where(big, cur * 1e-150, cur)
            prev = np.where(big, prev * 1e-150, prev)
            log_scale = log_scale + np.where(big, 150 * math.log(10), 0.0)
        kk = np.arange(dim - n)
        m = n + kk
        with np.errstate(divide="ignore"):
            log_pref = 0.5 * (gammaln(n + 1) - gammaln(m + 1)) + kk * log_amp - x / 2
            val = np.sign(cur[: dim - n]) * np.exp(
                log_pref + np.log(np.abs(cur[: dim - n])) + log_scale[: dim - n]
            )
        S[m, n] = val
    return S


def displacement_matrix(
    alpha: complex, dim: int, tail_tol: float = TAIL_TOL, check_cols: int | None = None
) -> FockOperator:
    """Matrix elements ``<m|D(alpha)|n>`` of ``D(alpha) = exp(alpha a^+ - alpha^* a)``.

    The entries are exact for every retained ``m, n``; truncation only shows as
    missing column weight. The first ``check_cols`` columns (default
    ``max(4, ceil|alpha|)``) must keep all but ``tail_tol`` of their norm.
    """
    if dim < 1:
        raise DimensionError("dim must be >= 1")
    alpha = complex(alpha)
    if alpha == 0:
        return FockOperator(np.eye(dim))
    x = abs(alpha) ** 2
    S = _displacement_magnitudes(x, dim)
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lower = m >= n
    mag = np.where(lower, S, S.T)
    sign = np.where(lower, 1.0, (-1.0) ** ((n - m) % 2))
    D = mag * sign * np.exp(1j * (m - n) * np.angle(alpha))

    ncheck = min(dim, check_cols if check_cols is not None else max(4, math.ceil(abs(alpha))))
    if ncheck == 0:
        return FockOperator(D)
    defect = 1.0 - np.sum(np.abs(D[:, :ncheck]) ** 2, axis=0)
    worst = float(defect.max())
    if worst > tail_tol:
        raise TruncationError(
            f"D({alpha:.4g}) at dim={dim}: column norm defect {worst:.3g} > {tail_tol:.3g}"
        )
    return FockOperator(D, truncation_deficit=max(worst, 0.0))


def thermal_state(nbar: float, dim: int, tail_tol: float = TAIL_TOL) -> FockOperator:
    """Geometric photon-number distribution with mean ``nbar``; not renormalized."""
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    k = np.arange(dim)
    if nbar == 0:
        p = (k == 0).astype(float)
    else:
        p = np.exp(-math.log1p(nbar) + k * (math.log(nbar) - math.log1p(nbar)))
    deficit = max(0.0, 1.0 - p.sum())
    if deficit > tail_tol:
        raise TruncationError(f"thermal nbar={nbar} loses {deficit:.3g} beyond {dim} levels")
    return FockOperator(np.diag(p), hermitian=True, truncation_deficit=deficit)


def _loss_coefficients(eta: float, dim: int, l: int) -> np.ndarray:
    """``sqrt(C(m+l, l) C(m'+l, l)) eta^((m+m')/2) (1-eta)^l`` on the ``dim - l`` surviving levels."""
    m = np.arange(dim - l)
    with np.errstate(divide="ignore"):
        log_eta = math.log(eta) if eta > 0 else -np.inf
        log_keep = math.log1p(-eta) if eta < 1 else -np.inf
    half = 0.5 * log_binomial(m + l, l)
    if l == 0:
        lost = 0.0
    else:
        lost = l * log_keep
    with np.errstate(invalid="ignore"):
        exp_m = np.where(m == 0, 0.0, 0.5 * m * log_eta)
    v = half + exp_m
    return np.exp(v[:, None] + v[None, :] + lost)


def loss_channel(state, eta: float, mode: str | None = None):
    """Pure-loss channel of transmission ``eta``.

    ``state`` is a single-mode :class:`FockOperator` (``mode`` ignored) or a
    :class:`TwoModeState` with ``mode`` in ``{"A", "B"}``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if isinstance(state, TwoModeState):
        if mode not in ("A", "B"):
            raise ValueError("two-mode loss needs mode='A' or mode='B'")
        if eta == 1.0:
            return state
        d = state.dim
        rho = state.tensor4()
        out = np.zeros_like(rho)
        for l in range(d):
            c = _loss_coefficients(eta, d, l)
            if not c.any():
                continue
            if mode == "A":
                out[: d - l, :, : d - l, :] += c[:, None, :, None] * rho[l:, :, l:, :]
            else:
                out[:, : d - l, :, : d - l] += c[None, :, None, :] * rho[:, l:, :, l:]
        return TwoModeState(out.reshape(d * d, d * d), state.truncation_deficit)
    if isinstance(state, FockOperator) and state.modes == 1:
        if eta == 1.0:
            return state
        d = state.dim
        rho = state.entries
        out = np.zeros((d, d), dtype=complex)
        for l in range(d):
            c = _loss_coefficients(eta, d, l)
            out[: d - l, : d - l] += c * rho[l:, l:]
        return FockOperator(out, state.hermitian, truncation_deficit=state.truncation_deficit)
    raise TypeError("loss_channel expects a single-mode FockOperator or a TwoModeState")


def _splitter_isometry(T: float, dim: int) -> np.ndarray:
    """Columns ``|n> -> sum_k sqrt(C(n,k) T^k (1-T)^(n-k)) |k, n-k>``."""
    V = np.zeros((dim * dim, dim))
    with np.errstate(divide="ignore"):
        log_t = math.log(T) if T > 0 else -np.inf
        log_r = math.log1p(-T) if T < 1 else -np.inf
    for n in range(dim):
        k = np.arange(n + 1)
        with np.errstate(invalid="ignore"):
            lw = log_binomial(n, k) + np.where(k == 0, 0.0, k * log_t)
            lw = lw + np.where(n - k == 0, 0.0, (n - k) * log_r)
        V[k * dim + (n - k), n] = np.exp(0.5 * lw)
    return V


def split_single_mode(state: FockOperator, T: float, out_dim: int | None = None) -> TwoModeState:
    """Send ``state`` into one port of a beamsplitter with vacuum in the other.

    Mode A receives the transmitted fraction ``T`` (amplitude ``sqrt(T)``), mode B
    the reflected ``1 - T``; all amplitudes are real and positive.
    """
    if not 0.0 <= T <= 1.0:
        raise ValueError("T must lie in [0, 1]")
    d = state.dim
    out_dim = d if out_dim is None else out_dim
    if out_dim < d:
        raise DimensionError(f"output dim {out_dim} cannot hold {d}-level input")
    rho = np.zeros((out_dim, out_dim), dtype=complex)
    rho[:d, :d] = state.entries
    V = _splitter_isometry(T, out_dim)
    return TwoModeState(V @ rho @ V.T, state.truncation_deficit)


def tensor(op_a: FockOperator, op_b: FockOperator) -> FockOperator:
    if op_a.modes != 1 or op_b.modes != 1:
        raise DimensionError("tensor() combines two single-mode operators")
    if op_a.dim != op_b.dim:
        raise DimensionError(f"mode dims differ: {op_a.dim} vs {op_b.dim}")
    return FockOperator(
        np.kron(op_a.entries, op_b.entries), op_a.hermitian and op_b.hermitian, modes=2
    )


def expectation(op, state) -> complex | float:
    """``tr(op rho)`` (or ``<v|op|v>`` for vectors); real when ``op`` is Hermitian."""
    O = op.entries if isinstance(op, FockOperator) else np.asarray(op)
    if isinstance(state, FockVector):
        v = state.amplitudes
        if O.shape[0] != v.size:
            raise DimensionError("operator and vector sizes differ")
        val = np.vdot(v, O @ v)
    else:
        R = state.entries if isinstance(state, (FockOperator, TwoModeState)) else np.asarray(state)
        if O.shape != R.shape:
            raise DimensionError(f"operator {O.shape} and state {R.shape} sizes differ")
        val = np.sum(O * R.T)
    hermitian = isinstance(op, FockOperator) and op.hermitian
    return float(val.real) if hermitian else complex(val)
