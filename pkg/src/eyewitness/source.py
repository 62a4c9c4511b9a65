"""Heralded down-conversion source, the two-mode experimental state, and the
closed-form witness value for it.

Photon pairs follow the two-mode squeezed vacuum law ``(1 - t^2) t^(2n)`` with
``t = tanh g``. A threshold heralding detector of efficiency ``eta_h`` fires with
probability ``1 - (1 - eta_h)^n``. The heralded photon travels through a channel
of transmission ``eta_t`` and hits a beamsplitter. Mode A (single-photon
detector, efficiency ``eta_a``) gets the reflected share ``R = 1 - T``. Mode B
(the eye, efficiency ``eta_b``) gets the transmitted share ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .detectors import DetectorSpec
from .errors import TruncationError
from .fock import TAIL_TOL, FockOperator, TwoModeState, log_binomial, loss_channel, split_single_mode
from .jets import JetValue, variable

__all__ = [
    "ExperimentParams",
    "heralded_distribution",
    "heralded_state",
    "experiment_state",
    "photon_number_distribution",
    "w_thermal_closed_form",
    "expected_w_closed_form",
    "thermal_weights",
]


@dataclass(frozen=True)
class ExperimentParams:
    """Source, channel and detector settings.

    ``alpha``/``beta`` are the physical displacements in front of the lossy
    detectors; ``None`` selects ``1/sqrt(eta_a)`` and ``sqrt(theta_b/eta_b)``,
    i.e. effective amplitudes 1 and ``sqrt(theta_b)`` once loss is moved onto
    the state.
    """

    g: float = 0.1
    eta_h: float = 0.5
    eta_t: float = 0.9
    T: float = 0.5
    eta_a: float = 0.8
    eta_b: float = 0.08
    theta_a: int = 1
    theta_b: int = 7
    alpha: complex | None = None
    beta: complex | None = None

    def __post_init__(self):
        for name in ("eta_h", "eta_t", "T", "eta_a", "eta_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.eta_a == 0 or self.eta_b == 0:
            raise ValueError("detector efficiencies must be positive")

    @property
    def tg2(self) -> float:
        return math.tanh(self.g) ** 2

    @property
    def rh2(self) -> float:
        """Squared amplitude reflectivity of the heralding detector, ``1 - eta_h``."""
        return 1.0 - self.eta_h

    @property
    def alpha_phys(self) -> complex:
        return complex(1 / math.sqrt(self.eta_a) if self.alpha is None else self.alpha)

    @property
    def beta_phys(self) -> complex:
        return complex(math.sqrt(self.theta_b / self.eta_b) if self.beta is None else self.beta)

    @property
    def alpha_eff(self) -> complex:
        return self.alpha_phys * math.sqrt(self.eta_a)

    @property
    def beta_eff(self) -> complex:
        return self.beta_phys * math.sqrt(self.eta_b)

    @property
    def det_a(self) -> DetectorSpec:
        return DetectorSpec(self.theta_a, self.eta_a)

    @property
    def det_b(self) -> DetectorSpec:
        return DetectorSpec(self.theta_b, self.eta_b)

    def with_(self, **kw) -> ExperimentParams:
        return replace(self, **kw)


def thermal_weights(g: float, eta_h: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """``((c1, nbar1), (c2, nbar2))`` with ``rho_h = c1 rho_th(nbar1) - c2 rho_th(nbar2)``."""
    t2 = math.tanh(g) ** 2
    if t2 == 0:
        raise ValueError("heralding needs g > 0")
    if eta_h <= 0:
        raise ValueError("heralding needs eta_h > 0")
    r2 = 1.0 - eta_h
    c2 = (1 - t2) / (t2 * eta_h)
    c1 = (1 - r2 * t2) / (t2 * eta_h)
    return (c1, t2 / (1 - t2)), (c2, r2 * t2 / (1 - r2 * t2))


def heralded_distribution(g: float, eta_h: float, dim: int) -> np.ndarray:
    """Photon-number law of the heralded arm on levels ``0..dim-1``.

    ``p_k = (1 - r t^2)(1 - t^2) t^(2(k-1)) sum_{j<k} r^j`` with ``r = 1 - eta_h``:
    the thermal-difference expression rewritten without cancellation.
    """
    if g <= 0:
        raise ValueError("heralding needs g > 0")
    if not 0.0 < eta_h <= 1.0:
        raise ValueError("eta_h must lie in (0, 1]")
    t2 = math.tanh(g) ** 2
    r = 1.0 - eta_h
    k = np.arange(dim)
    if r == 0.0:
        geo = (k >= 1).astype(float)
    else:
        geo = -np.expm1(k * math.log(r)) / eta_h  # sum_{j<k} r^j
    with np.errstate(divide="ignore"):
        logt = np.where(k >= 1, (k - 1) * math.log(t2), -np.inf)
    return (1 - r * t2) * (1 - t2) * np.exp(logt) * geo


def heralded_state(g: float, eta_h: float, dim: int, tail_tol: float = TAIL_TOL) -> FockOperator:
    p = heralded_distribution(g, eta_h, dim)
    deficit = max(0.0, 1.0 - p.sum())
    if deficit > tail_tol:
        raise TruncationError(f"heralded state loses {deficit:.3g} beyond {dim} levels")
    return FockOperator(np.diag(p), hermitian=True, truncation_deficit=deficit)


def experiment_state(params: ExperimentParams, dim: int, picture: str = "effective") -> TwoModeState:
    """Two-mode state reaching the detectors.

    ``picture="effective"`` applies the detector losses to the state (use with
    lossless observables at effective amplitudes); ``"povm"`` stops after the
    beamsplitter, leaving the losses to dressed detectors.
    """
    rho = heralded_state(params.g, params.eta_h, dim)
    rho = loss_channel(rho, params.eta_t)
    state = split_single_mode(rho, 1.0 - params.T)
    if picture == "povm":
        return state
    if picture != "effective":
        raise ValueError("picture must be 'effective' or 'povm'")
    state = loss_channel(state, params.eta_a, "A")
    return loss_channel(state, params.eta_b, "B")


def photon_number_distribution(params: ExperimentParams, nmax: int | None = None, tail_tol: float = 1e-13) -> np.ndarray:
    """Joint detected-photon law ``p[n_A, n_B]`` after all losses.

    Each heralded photon independently ends up counted in A with probability
    ``eta_t R eta_a``, in B with ``eta_t T eta_b``, or lost: a multinomial mixture
    over the heralded photon number.
    """
    if nmax is None:
        t2 = params.tg2
        nmax = 8 if t2 == 0 else max(8, int(math.log(tail_tol) / math.log(t2)) + 8)
    q = heralded_distribution(params.g, params.eta_h, nmax + 1)
    pa = params.eta_t * (1 - params.T) * params.eta_a
    pb = params.eta_t * params.T * params.eta_b
    pl = 1.0 - pa - pb
    a = np.arange(nmax + 1)[:, None]
    b = np.arange(nmax + 1)[None, :]
    out = np.zeros((nmax + 1, nmax + 1))

    def safe_log(x):
        return math.log(x) if x > 0 else -np.inf

    la, lb, ll = safe_log(pa), safe_log(pb), safe_log(pl)
    for n in range(nmax + 1):
        if q[n] == 0:
            continue
        rest = n - a - b
        ok = rest >= 0
        with np.errstate(invalid="ignore"):
            lw = (
                log_binomial(n, a + b + 0 * b)
                + log_binomial(a + b, a + 0 * b)
                + np.where(a > 0, a * la, 0.0)
                + np.where(b > 0, b * lb, 0.0)
                + np.where(rest > 0, rest * ll, 0.0)
            )
        out += q[n] * np.where(ok, np.exp(lw), 0.0)
    return out


def _thermal_bracket(nbar: float, params: ExperimentParams, order: int) -> JetValue:
    """The no-click generating function of the split thermal state as a jet in ``1 - eta_b``."""
    x = variable(1.0 - params.eta_b, order)
    eb = 1.0 - x
    ea = params.eta_a
    R, T = 1.0 - params.T, params.T
    a, b = params.alpha_phys, params.beta_phys
    u = a * ea * math.sqrt(R)
    v = b * math.sqrt(T)
    # |u + v eb|^2 with eb real
    mod2 = abs(u) ** 2 + 2 * (u.conjugate() * v).real * eb + abs(v) ** 2 * eb * eb
    d1 = nbar * (ea * R + T * eb) + 1.0
    e1 = (-ea * abs(a) ** 2 - eb * abs(b) ** 2 + nbar * mod2 / d1).exp() / d1
    d2 = ea * nbar * R + 1.0
    e2 = math.exp(-ea * abs(a) ** 2 / d2) / d2
    d3 = eb * (nbar * T) + 1.0
    e3 = (-abs(b) ** 2 * eb / d3).exp() / d3
    return (1.0 + 4 * e1 - 2 * e2 - 2 * e3) / eb


def w_thermal_closed_form(nbar: float, params: ExperimentParams) -> float:
    """Phase-averaged ``<sigma_A sigma_B>`` for a thermal state of mean ``nbar`` entering the beamsplitter.

    Uses dressed detectors ``(1, eta_a)`` and ``(theta_b, eta_b)`` at the physical
    amplitudes; the ``(theta_b - 1)``-th derivative in ``1 - eta_b`` comes from
    jet arithmetic.
    """
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if params.theta_a != 1:
        raise ValueError("the closed form assumes a single-photon detector in mode A")
    r = params.theta_b - 1
    jet = _thermal_bracket(nbar, params, r)
    return float((params.eta_b**params.theta_b * jet.coefficients[r]).real)


def expected_w_closed_form(params: ExperimentParams) -> float:
    """``<W>`` of the heralded state after transmission ``eta_t``, as a thermal difference."""
    (c1, n1), (c2, n2) = thermal_weights(params.g, params.eta_h)
    et = params.eta_t
    return c1 * w_thermal_closed_form(et * n1, params) - c2 * w_thermal_closed_form(et * n2, params)
