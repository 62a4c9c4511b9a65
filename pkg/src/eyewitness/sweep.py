"""Witness gap along the beamsplitter transmission, optimized over squeezing.

For each transmission ``T``, ``Delta W = <W> - W_ppt`` is maximized over the
squeezing ``g`` by golden-section search. The search assumes ``Delta W`` is
unimodal in ``g`` on the bracket. ``<W>`` comes from the closed form. The
bounds come from the exact detected-photon distribution, which is all the
calibration statistics depend on.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .bounds import CalibrationSet, WitnessReport, witness_report
from .detectors import DetectorSpec
from .source import ExperimentParams, expected_w_closed_form, photon_number_distribution
from .witness import sigma_observable, witness_matrix

__all__ = [
    "golden_section_max",
    "witness_elements_for",
    "evaluate_point",
    "optimize_g",
    "SweepRow",
    "run_sweep",
]

INVPHI = (math.sqrt(5) - 1) / 2


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-7, max_iter: int = 200):
    """Maximize ``f`` on ``[lo, hi]``; returns ``(x, f(x))``.

    Probes never leave the bracket. The end points are compared at the end,
    so a maximum on the boundary is reported exactly there.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    best = (c, fc) if fc >= fd else (d, fd)
    for x in (lo, hi):
        fx = f(x)
        if fx >= best[1]:
            best = (x, fx)
    return best


def witness_elements_for(params: ExperimentParams) -> dict:
    """Witness elements at the effective amplitudes (lossless observables)."""
    sA = sigma_observable(DetectorSpec(params.theta_a), params.alpha_eff, 3)
    sB = sigma_observable(DetectorSpec(params.theta_b), params.beta_eff, 3)
    return witness_matrix(sA, sB).elements


def evaluate_point(params: ExperimentParams, calib: CalibrationSet, pA_star: float | None = None,
                   elements: dict | None = None) -> WitnessReport:
    elements = witness_elements_for(params) if elements is None else elements
    return witness_report(
        photon_number_distribution(params),
        elements,
        calib,
        DetectorSpec(1),
        calib.det,
        expected_w=expected_w_closed_form(params),
        pA_star=pA_star,
    )


def optimize_g(params: ExperimentParams, calib: CalibrationSet, g_lo: float = 1e-3, g_hi: float = 1.0,
               tol: float = 1e-7, pA_star: float | None = None) -> tuple[float, WitnessReport]:
    elements = witness_elements_for(params)

    def gap(g):
        return evaluate_point(params.with_(g=g), calib, pA_star, elements).delta_w

    g_opt, _ = golden_section_max(gap, g_lo, g_hi, tol)
    return g_opt, evaluate_point(params.with_(g=g_opt), calib, pA_star, elements)


@dataclass(frozen=True)
class SweepRow:
    T: float
    g_opt: float
    expected_w: float
    w_ppt: float
    delta_w: float


def run_sweep(params: ExperimentParams, T_values, calib: CalibrationSet, workers: int = 1,
              g_lo: float = 1e-3, g_hi: float = 1.0, tol: float = 1e-7,
              pA_star: float | None = None) -> list[SweepRow]:
    """One optimized row per transmission, in the order of ``T_values``."""

    def one(T):
        g, rep = optimize_g(params.with_(T=T), calib, g_lo, g_hi, tol, pA_star)
        return SweepRow(T, g, rep.expected_w, rep.w_ppt, rep.delta_w)

    T_values = list(T_values)
    if workers <= 1:
        return [one(T) for T in T_values]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(one, T_values))
