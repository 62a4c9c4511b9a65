"""Event-by-event Monte Carlo of the heralded experiment.

Photon numbers are sampled; detection is integrated analytically. Each trial
draws a pair number, heralds it through a threshold detector of efficiency
``eta_h``, and thins the signal by ``eta_t``. Heralded events contribute:

* to the witness, the exact phase-averaged correlator of the Fock state
  ``|n>`` entering the beamsplitter. The splitter makes that state coherent
  across ``(k, n - k)``, so the correlator keeps those coherences and the arm
  losses via Kraus operators;
* to the calibration statistics, the conditional expectation given that
  photon number, with the beamsplitter and arm losses as a trinomial thinning.

The detected pairs ``(n_A, n_B)`` are also sampled, through the beamsplitter and
the arm losses, and are available for distribution checks.

Matrix elements of the displacement come from scipy's generalized Laguerre
polynomials, a route independent of :mod:`eyewitness.fock`.

Random numbers come in blocks of ``block_size`` trials. Block ``b`` uses
``SeedSequence(seed, spawn_key=(b,))``, so any sharding of the blocks over
workers yields the same integer histograms and therefore identical estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .bounds import CalibrationSet, MeasuredProbabilities, no_click_curves
from .detectors import DetectorSpec, no_click_prob_fock
from .errors import PostSelectionError
from .source import ExperimentParams

__all__ = [
    "McConfig",
    "McEstimate",
    "McTally",
    "run_tally",
    "sample_heralded_counts",
    "fock_input_correlator",
    "estimate_witness",
    "estimate_measured_probabilities",
]

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class McConfig:
    n_samples: int
    seed: int = 0
    params: ExperimentParams = field(default_factory=ExperimentParams)
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")

    @property
    def n_blocks(self) -> int:
        return -(-self.n_samples // self.block_size)

    def block_len(self, b: int) -> int:
        return min(self.block_size, self.n_samples - b * self.block_size)


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_err: float
    n_effective: int


def _generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _sample_block(params: ExperimentParams, size: int, rng: np.random.Generator):
    """Heralded events of one block: (photons entering the splitter, n_A, n_B)."""
    pairs = rng.geometric(1.0 - params.tg2, size) - 1
    herald = rng.binomial(pairs, params.eta_h)
    n = pairs[herald >= 1]
    n_in = rng.binomial(n, params.eta_t)
    k_a = rng.binomial(n_in, 1.0 - params.T)
    n_a = rng.binomial(k_a, params.eta_a)
    n_b = rng.binomial(n_in - k_a, params.eta_b)
    return n_in, n_a, n_b


def _pad_add(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    shape = tuple(max(a, b) for a, b in zip(x.shape, y.shape))
    out = np.zeros(shape, dtype=np.int64)
    out[tuple(slice(0, s) for s in x.shape)] += x
    out[tuple(slice(0, s) for s in y.shape)] += y
    return out


@dataclass
class McTally:
    """Integer sufficient statistics; merging is exact and order-free."""

    trials: int = 0
    hist_in: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    joint: np.ndarray = field(default_factory=lambda: np.zeros((1, 1), dtype=np.int64))

    @property
    def accepted(self) -> int:
        return int(self.hist_in.sum())

    def merge(self, other: McTally) -> McTally:
        return McTally(
            self.trials + other.trials,
            _pad_add(self.hist_in, other.hist_in),
            _pad_add(self.joint, other.joint),
        )


def _tally_blocks(cfg: McConfig, blocks) -> McTally:
    tally = McTally()
    for b in blocks:
        size = cfg.block_len(b)
        n_in, n_a, n_b = _sample_block(cfg.params, size, _generator(cfg.seed, b))
        joint = np.zeros((int(n_a.max(initial=0)) + 1, int(n_b.max(initial=0)) + 1), dtype=np.int64)
        np.add.at(joint, (n_a, n_b), 1)
        tally = tally.merge(McTally(size, np.bincount(n_in).astype(np.int64), joint))
    return tally


def run_tally(cfg: McConfig, workers: int = 1) -> McTally:
    """Sample all blocks, sharded over ``workers`` contiguous ranges."""
    nb = cfg.n_blocks
    workers = max(1, min(workers, nb))
    shards = [range(nb * w // workers, nb * (w + 1) // workers) for w in range(workers)]
    if workers == 1:
        parts = [_tally_blocks(cfg, shards[0])]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda s: _tally_blocks(cfg, s), shards))
    total = McTally()
    for p in parts:
        total = total.merge(p)
    return total


def sample_heralded_counts(cfg: McConfig) -> tuple[np.ndarray, np.ndarray]:
    """Detected photon numbers ``(n_A, n_B)`` of every heralded event, in event order."""
    na, nb = [], []
    for b in range(cfg.n_blocks):
        _, n_a, n_b = _sample_block(cfg.params, cfg.block_len(b), _generator(cfg.seed, b))
        na.append(n_a)
        nb.append(n_b)
    return np.concatenate(na), np.concatenate(nb)


# --- analytic per-event correlator -------------------------------------------


def _displacement_rows(alpha: complex, rows: int, cols: int) -> np.ndarray:
    """``<m|D(alpha)|k>`` for ``m < rows``, ``k < cols`` via Laguerre polynomials."""
    m = np.arange(rows)[:, None]
    k = np.arange(cols)[None, :]
    lo, hi = np.minimum(m, k), np.maximum(m, k)
    x = abs(alpha) ** 2
    if alpha == 0:
        return (m == k).astype(complex)
    mag = np.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) - x / 2 + (hi - lo) * math.log(abs(alpha)))
    phase = np.where(m >= k, np.exp(1j * (m - k) * np.angle(alpha)),
                     np.exp(1j * (k - m) * np.angle(-np.conj(alpha))))
    return mag * phase * eval_genlaguerre(lo, hi - lo, x)


def _sigma(theta: int, alpha: complex, dim: int) -> np.ndarray:
    rows = _displacement_rows(alpha, theta, dim)
    return 2 * rows.conj().T @ rows - np.eye(dim)


def _kraus_amp(eta: float, k: np.ndarray, l: int) -> np.ndarray:
    """``sqrt(C(k, l) eta^(k-l) (1-eta)^l)``, zero where ``l > k``."""
    out = np.zeros(k.shape)
    ok = k >= l
    kk = k[ok]
    out[ok] = np.sqrt(np.exp(gammaln(kk + 1) - gammaln(l + 1) - gammaln(kk - l + 1)) * eta ** (kk - l) * (1 - eta) ** l)
    return out


def fock_input_correlator(n: int, params: ExperimentParams, alpha_eff: complex, beta_eff: complex) -> float:
    """Phase-averaged ``<sigma_A sigma_B>`` when ``|n>`` enters the beamsplitter.

    Observables are lossless with effective amplitudes; the arm losses act on
    the state through their Kraus operators.
    """
    R = 1.0 - params.T
    k = np.arange(n + 1)
    amp = np.exp(0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))
    with np.errstate(divide="ignore"):
        amp = amp * np.sqrt(np.where(k > 0, R**k, 1.0) * np.where(n - k > 0, params.T ** (n - k), 1.0))
    sA = _sigma(params.theta_a, alpha_eff, n + 1)
    sB = _sigma(params.theta_b, beta_eff, n + 1)
    total = 0.0
    for la in range(n + 1):
        ea = _kraus_amp(params.eta_a, k, la)
        for lb in range(n + 1 - la):
            psi = amp * ea * _kraus_amp(params.eta_b, n - k, lb)
            if not psi.any():
                continue
            ia = np.clip(k - la, 0, n)
            ib = np.clip(n - k - lb, 0, n)
            M = sA[np.ix_(ia, ia)] * sB[np.ix_(ib, ib)]
            total += float(np.real(psi @ M @ psi))
    return total


def _weighted_mean(counts: np.ndarray, values: np.ndarray) -> McEstimate:
    n = int(counts.sum())
    if n == 0:
        raise PostSelectionError("no event survived heralding")
    w = counts / n
    mean = float(w @ values)
    var = float(w @ (values - mean) ** 2)
    se = math.sqrt(var * n / (n - 1) / n) if n > 1 else float("inf")
    return McEstimate(mean, se, n)


def estimate_witness(cfg: McConfig, alpha_eff: complex | None = None, beta_eff: complex | None = None,
                     workers: int = 1, tally: McTally | None = None) -> McEstimate:
    """Monte Carlo ``<W>`` with its standard error."""
    p = cfg.params
    alpha_eff = p.alpha_eff if alpha_eff is None else alpha_eff
    beta_eff = p.beta_eff if beta_eff is None else beta_eff
    tally = run_tally(cfg, workers) if tally is None else tally
    h = tally.hist_in
    c = np.array([fock_input_correlator(n, p, alpha_eff, beta_eff) if h[n] else 0.0 for n in range(h.size)])
    return _weighted_mean(h, c)


def _detected_law(n: int, params: ExperimentParams, nmax: int) -> np.ndarray:
    """``P(n_A, n_B | n photons enter the beamsplitter)``, a trinomial thinning."""
    pa = (1.0 - params.T) * params.eta_a
    pb = params.T * params.eta_b
    out = np.zeros((nmax + 1, nmax + 1))
    for a in range(n + 1):
        for b in range(n + 1 - a):
            out[a, b] = (math.comb(n, a) * math.comb(n - a, b)
                         * pa**a * pb**b * (1.0 - pa - pb) ** (n - a - b))
    return out


def estimate_measured_probabilities(cfg: McConfig, calib: CalibrationSet, workers: int = 1,
                                    tally: McTally | None = None) -> MeasuredProbabilities:
    """Calibration statistics with standard errors.

    Like the witness, each event contributes the exact conditional expectation
    given the photon number entering the beamsplitter. This has less variance
    than scoring the sampled ``(n_A, n_B)``, and its standard error does not
    collapse when rare detected multi-photon events are missing from the sample.
    """
    tally = run_tally(cfg, workers) if tally is None else tally
    h = tally.hist_in
    nmax = h.size - 1
    a_plus = no_click_prob_fock(DetectorSpec(1), np.arange(nmax + 1))
    det = calib.det
    c0, c1, c2 = (no_click_curves(det, beta, nmax + 1) for beta in calib.amplitudes)
    cells = {
        "pA_plus": np.outer(a_plus, np.ones(nmax + 1)),
        "pAB_pp_b0": np.outer(a_plus, c0),
        "pAB_mp_b0": np.outer(1 - a_plus, c0),
        "pAB_pp_b1": np.outer(a_plus, c1),
        "pAB_mp_b1": np.outer(1 - a_plus, c1),
        "pB_plus_b2": np.outer(np.ones(nmax + 1), c2),
    }
    per_n = {k: np.zeros(nmax + 1) for k in cells}
    for n in range(nmax + 1):
        if h[n] == 0:
            continue
        law = _detected_law(n, cfg.params, nmax)
        for k, v in cells.items():
            per_n[k][n] = np.sum(law * v)
    est = {k: _weighted_mean(h, v) for k, v in per_n.items()}
    se = {k: e.std_err for k, e in est.items()}
    se["pA_minus"] = se["pA_plus"]
    v = {k: e.value for k, e in est.items()}
    return MeasuredProbabilities(
        pA_plus=v["pA_plus"], pA_minus=1.0 - v["pA_plus"],
        pAB_pp_b0=v["pAB_pp_b0"], pAB_mp_b0=v["pAB_mp_b0"],
        pAB_pp_b1=v["pAB_pp_b1"], pAB_mp_b1=v["pAB_mp_b1"],
        pB_plus_b2=v["pB_plus_b2"], std_err=se,
    )
