import math
import time

import numpy as np
import pytest

from eyewitness.bounds import (
    CalibrationSet,
    bound_p_star_B,
    bound_pij,
    find_calibration_amplitudes,
    measure_probabilities,
    no_click_curves,
    true_populations,
    w_ppt_full,
    w_ppt_qubit,
    witness_report,
)
from eyewitness.detectors import DetectorSpec
from eyewitness.errors import CalibrationError, DegenerateBoundError
from eyewitness.fock import FockOperator, TwoModeState, fock_state, split_single_mode
from eyewitness.witness import sigma_observable, witness_matrix

from frozen import BETA_P0_EQ_P1, BETA_P0_EQ_P3, BETA_P1_EQ_P2, BETA_P1_EQ_P2_SECOND

A = DetectorSpec(1)
B = DetectorSpec(7)


def embedded(rho4: np.ndarray, d: int) -> TwoModeState:
    """Embed a two-qubit density matrix into a d-level two-mode space."""
    out = np.zeros((d * d, d * d), complex)
    idx = [0 * d + 0, 0 * d + 1, 1 * d + 0, 1 * d + 1]
    out[np.ix_(idx, idx)] = rho4
    return TwoModeState(out)


def random_density(rng, n):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def test_calibration_values(calib):
    assert calib.beta0 == pytest.approx(BETA_P0_EQ_P3, abs=1e-10)
    assert calib.beta1 == pytest.approx(BETA_P1_EQ_P2, abs=1e-10)
    assert calib.beta2 == pytest.approx(BETA_P0_EQ_P1, abs=1e-10)
    assert calib.beta0 > calib.beta1
    assert calib.beta2 == pytest.approx(math.sqrt(7), abs=1e-12)


def test_calibration_side_conditions(calib):
    P0 = no_click_curves(B, calib.beta0, 11)
    assert P0[0] == pytest.approx(P0[3], abs=1e-12) and np.all(P0[2:] <= P0[1])
    P1 = no_click_curves(B, calib.beta1, 11)
    assert P1[1] == pytest.approx(P1[2], abs=1e-12) and np.all(P1[3:] <= P1[1]) and P1[0] > P1[1]
    P2 = no_click_curves(B, calib.beta2, 11)
    assert P2[0] == pytest.approx(P2[1], abs=1e-12) and np.all(P2[2:] < P2[0])
    assert np.argmax(P2[2:]) == 1


def test_second_beta1_root_is_admissible_but_worse_conditioned(calib):
    P_small = no_click_curves(B, calib.beta1, 2)
    P_big = no_click_curves(B, BETA_P1_EQ_P2_SECOND, 11)
    assert P_big[1] == pytest.approx(P_big[2], abs=1e-12)
    assert abs(P_big[1] - P_big[0]) < abs(P_small[1] - P_small[0])


def test_calibration_is_dim_independent():
    a = find_calibration_amplitudes(B, dim=64)
    b = find_calibration_amplitudes(B, dim=128)
    assert max(abs(x - y) for x, y in zip(a, b)) < 1e-8


def test_calibration_runtime():
    t = time.perf_counter()
    find_calibration_amplitudes(B, dim=64)
    assert time.perf_counter() - t < 1.0


def test_calibration_errors():
    with pytest.raises(CalibrationError):
        find_calibration_amplitudes(DetectorSpec(7, 0.5))
    with pytest.raises(CalibrationError):
        find_calibration_amplitudes(DetectorSpec(1))
    with pytest.raises(CalibrationError):
        find_calibration_amplitudes(B, bracket=(0.5, 1.5))


def test_entangled_single_photon_bounds(calib):
    rho = split_single_mode(fock_state(1, 4).projector(), 0.5)
    meas = measure_probabilities(rho, A, B, calib)
    meas.check()
    p00, p01, p10, p11 = bound_pij(meas, B, calib)
    assert 0 <= p00 <= 0.55
    assert p01 >= 0.5 - 1e-12 and p10 >= 0.5 - 1e-12
    assert p11 >= 0


def test_vacuum_bound_is_one(calib):
    rho = TwoModeState(fock_state(0, 9).projector().entries)
    p00, p01, p10, p11 = bound_pij(measure_probabilities(rho, A, B, calib), B, calib)
    assert p00 == pytest.approx(1.0, abs=1e-12)
    assert p10 == 0 and p11 == 0


def test_measured_marginal_consistency(calib):
    rng = np.random.default_rng(7)
    p = rng.random((5, 6))
    p /= p.sum()
    m = measure_probabilities(p, A, B, calib)
    c0 = no_click_curves(B, calib.beta0, 6)
    assert m.pAB_pp_b0 + m.pAB_mp_b0 == pytest.approx(p.sum(0) @ c0)
    assert m.pA_plus == pytest.approx(p[0].sum())


def test_bounds_on_random_two_qubit_states(calib):
    rng = np.random.default_rng(11)
    for _ in range(50):
        rho = embedded(random_density(rng, 4), 4)
        meas = measure_probabilities(rho, A, B, calib)
        bounds = bound_pij(meas, B, calib)
        truth = true_populations(rho)
        for b, key in zip(bounds, ("p00", "p01", "p10", "p11")):
            assert b >= truth[key] - 1e-10
        assert bound_p_star_B(meas, B, calib) >= truth["pB_star"] - 1e-10


def test_degenerate_denominator():
    bad = CalibrationSet(math.sqrt(7), 2.0866, math.sqrt(7))
    meas = measure_probabilities(np.diag([1.0, 0, 0])[:, :3], A, B, bad)
    with pytest.raises(DegenerateBoundError):
        bound_pij(meas, B, bad)


def test_requires_lossless_detectors(calib):
    with pytest.raises(ValueError):
        measure_probabilities(np.eye(3) / 3, DetectorSpec(1, 0.8), B, calib)
    with pytest.raises(ValueError):
        measure_probabilities(np.eye(3) / 3, A, DetectorSpec(7, 0.08), calib)


def ideal_elements():
    el = {k: 0.0 for k in [(0, 0, 0, 0), (0, 1, 0, 1), (1, 0, 1, 0), (1, 1, 1, 1), (1, 1, 2, 0), (1, 1, 0, 2)]}
    el[(0, 1, 1, 0)] = 1.0
    return el


def test_w_ppt_qubit_examples():
    el = ideal_elements()
    assert w_ppt_qubit(el, 0, 0, 0, 0) == 0
    assert w_ppt_qubit(el, 0.5, 0, 0, 0.5) == pytest.approx(1.0)
    el[(0, 0, 0, 0)] = 0.3
    el[(1, 1, 1, 1)] = -0.2
    assert w_ppt_qubit(el, 0.5, 0.1, 0.2, 0.25) == pytest.approx(0.15 - 0.05 + 2 * math.sqrt(0.125))


def partial_transpose_b(rho):
    return rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def qubit_witness(el):
    W = np.diag([el[(0, 0, 0, 0)], el[(0, 1, 0, 1)], el[(1, 0, 1, 0)], el[(1, 1, 1, 1)]]).astype(complex)
    W[1, 2] = el[(0, 1, 1, 0)]
    W[2, 1] = np.conj(W[1, 2])
    return W


def test_w_ppt_qubit_is_ppt_maximum():
    el = {(0, 0, 0, 0): 0.1, (0, 1, 0, 1): 0.2, (1, 0, 1, 0): -0.1, (1, 1, 1, 1): 0.05, (0, 1, 1, 0): 0.4 - 0.3j}
    W = qubit_witness(el)
    p = np.array([0.2, 0.3, 0.3, 0.2])
    # saturating state: coherence |01><10| of modulus sqrt(p00 p11) aligned with W
    rho = np.diag(p).astype(complex)
    rho[2, 1] = math.sqrt(p[0] * p[3]) * np.conj(el[(0, 1, 1, 0)]) / abs(el[(0, 1, 1, 0)])
    rho[1, 2] = np.conj(rho[2, 1])
    assert np.linalg.eigvalsh(rho).min() >= -1e-12
    assert np.linalg.eigvalsh(partial_transpose_b(rho)).min() >= -1e-12
    assert np.trace(W @ rho).real == pytest.approx(w_ppt_qubit(el, *p), abs=1e-12)


def test_random_ppt_states_never_exceed_qubit_bound():
    rng = np.random.default_rng(5)
    el = {(0, 0, 0, 0): 0.03, (0, 1, 0, 1): 0.02, (1, 0, 1, 0): 0.04, (1, 1, 1, 1): 0.01, (0, 1, 1, 0): 0.58}
    W = qubit_witness(el)
    seen = 0
    for _ in range(400):
        rho = random_density(rng, 4)
        if np.linalg.eigvalsh(partial_transpose_b(rho)).min() < 0:
            continue
        seen += 1
        p = np.diag(rho).real
        assert np.trace(W @ rho).real <= w_ppt_qubit(el, *p) + 1e-12
    assert seen > 20


def test_w_ppt_full_examples():
    assert w_ppt_full(0.3, 0.2, 0, 0, 0.5, 0.5) == 0.3
    assert w_ppt_full(0.3, 0.0, 0.01, 0.02, 0.5, 0.5) == pytest.approx(0.33)
    assert w_ppt_full(0.3, 0.25, 0.04, 0.09, 0.5, -0.1j) == pytest.approx(0.3 + 2 * 0.5 * (0.5 * 0.2 + 0.1 * 0.3) + 0.13)


def test_report_on_single_photon_state_detects_entanglement(calib):
    d = 5
    rho = split_single_mode(fock_state(1, d).projector(), 0.5)
    W = witness_matrix(sigma_observable(A, 1.0, d), sigma_observable(B, math.sqrt(7), d))
    rep = witness_report(rho, W.elements, calib, witness=W)
    assert rep.oracle_pA_star
    assert rep.delta_w > 0
    assert rep.calibration.p_star == pytest.approx(rep.calibration.pA_star + rep.calibration.pB_star)


def test_report_on_product_state_is_sound(calib):
    d = 6
    rho_a = FockOperator(np.diag([0.5, 0.3, 0.2, 0, 0, 0]))
    rho_b = FockOperator(np.diag([0.2, 0.5, 0.2, 0.1, 0, 0]))
    rho = TwoModeState(np.kron(rho_a.entries, rho_b.entries))
    W = witness_matrix(sigma_observable(A, 1.0, d), sigma_observable(B, math.sqrt(7), d))
    assert witness_report(rho, W.elements, calib, witness=W).delta_w <= 1e-8
