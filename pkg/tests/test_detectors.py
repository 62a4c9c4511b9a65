import math

import numpy as np
import pytest

from eyewitness.detectors import (
    EYE,
    DetectorSpec,
    bloch_vector,
    displaced_no_click_operator,
    displaced_no_click_prob,
    no_click_prob_derivative_form,
    no_click_prob_fock,
    povm_ns_operator,
    povm_s_operator,
    seen_crossing_nbar,
    seen_prob_coherent,
)
from eyewitness.fock import coherent_state, displacement_matrix, expectation

from frozen import EYE_CROSSING_NBAR, EYE_SEEN_AT_87_5


def test_spec_validation():
    with pytest.raises(ValueError):
        DetectorSpec(0)
    with pytest.raises(ValueError):
        DetectorSpec(2, 0.0)
    with pytest.raises(ValueError):
        DetectorSpec(1.5)
    assert EYE == DetectorSpec(7, 0.08)
    assert EYE.lossless() == DetectorSpec(7, 1.0)


def test_no_click_examples():
    assert no_click_prob_fock(EYE, 3) == 1.0
    assert no_click_prob_fock(DetectorSpec(1), 0) == 1.0
    assert no_click_prob_fock(DetectorSpec(1), 4) == 0.0
    assert no_click_prob_fock(DetectorSpec(1, 0.5), 2) == pytest.approx(0.25, abs=1e-15)


def test_no_click_binomial_by_hand():
    det = DetectorSpec(3, 0.3)
    n = 9
    ref = sum(math.comb(n, m) * 0.3**m * 0.7 ** (n - m) for m in range(3))
    assert no_click_prob_fock(det, n) == pytest.approx(ref, rel=1e-13)


def test_derivative_form_matches_binomial_form():
    worst = 0.0
    for theta in range(1, 11):
        for eta in (0.05, 0.08, 0.5, 0.8, 1.0):
            det = DetectorSpec(theta, eta)
            for n in range(21):
                worst = max(worst, abs(no_click_prob_derivative_form(det, n) - no_click_prob_fock(det, n)))
    assert worst <= 1e-12


def test_monotonicity():
    p = no_click_prob_fock(EYE, np.arange(200))
    assert np.all(np.diff(p) <= 1e-15)
    etas = np.linspace(0.05, 1, 20)
    vals = [no_click_prob_fock(DetectorSpec(7, e), 12) for e in etas]
    assert np.all(np.diff(vals) <= 1e-15)


def test_povm_completeness():
    ns = povm_ns_operator(EYE, 50).entries
    s = povm_s_operator(EYE, 50).entries
    assert np.array_equal(ns + s, np.eye(50))
    d = np.diag(ns).real
    assert d.min() >= 0 and d.max() <= 1


def test_seen_probability_examples():
    assert seen_prob_coherent(EYE, 0) == 0
    grid = np.linspace(0, 2000, 4001)
    p = seen_prob_coherent(EYE, grid)
    assert np.all(np.diff(p) >= -1e-15)
    assert p[-1] == pytest.approx(1.0, abs=1e-12)
    assert 0.4 < seen_prob_coherent(EYE, 87.5) < 0.7
    assert seen_prob_coherent(EYE, 87.5) == pytest.approx(EYE_SEEN_AT_87_5, abs=1e-14)


def test_seen_probability_branches_agree():
    # the incomplete-gamma branch (mean > 30) against summation in extended precision
    det = DetectorSpec(7, 0.5)
    for nbar in (61.0, 80.0, 120.0):
        mu = 0.5 * nbar
        ref = 1 - sum(math.exp(-mu) * mu**k / math.factorial(k) for k in range(7))
        assert seen_prob_coherent(det, nbar) == pytest.approx(ref, rel=1e-12, abs=1e-16)


def test_seen_probability_matches_povm_expectation():
    nbar = 87.5
    psi = coherent_state(math.sqrt(nbar), 400)
    p_ns = expectation(povm_ns_operator(EYE, 400), psi)
    assert 1 - p_ns == pytest.approx(seen_prob_coherent(EYE, nbar), abs=1e-12)


def test_seen_crossing():
    assert seen_crossing_nbar(EYE) == pytest.approx(EYE_CROSSING_NBAR, abs=1e-9)


def test_displaced_no_click_examples():
    det = DetectorSpec(7)
    assert displaced_no_click_prob(det, 0.0, 0) == pytest.approx(1.0)
    betas = np.linspace(0, 6, 121)
    p0 = np.array([displaced_no_click_prob(det, b, 0, dim=16) for b in betas])
    # strict decrease is only resolvable in double precision once 1 - p0 > eps
    assert np.all(np.diff(p0) <= 0)
    assert np.all(np.diff(p0[betas >= 0.5]) < 0)
    # vacuum no-click probability is the Poisson CDF at mean |beta|^2
    for b in (1.0, 2.7, 5.5):
        ref = sum(math.exp(-b * b) * b ** (2 * k) / math.factorial(k) for k in range(7))
        assert displaced_no_click_prob(det, b, 0) == pytest.approx(ref, abs=1e-14)


def test_displaced_no_click_definition():
    det = DetectorSpec(4, 0.6)
    beta = 1.3 - 0.2j
    N = 120
    D = displacement_matrix(beta, N).entries
    pm = no_click_prob_fock(det, np.arange(N))
    for n in range(5):
        ref = float(np.sum(pm * np.abs(D[:, n]) ** 2))
        assert displaced_no_click_prob(det, beta, n, dim=8) == pytest.approx(ref, abs=1e-12)


def test_loss_absorption_identity():
    det = DetectorSpec(7, 0.08)
    beta = math.sqrt(87.5)
    for n in range(5):
        lhs = displaced_no_click_prob(det, beta, n)
        rhs = sum(
            math.comb(n, k) * 0.08**k * 0.92 ** (n - k)
            * displaced_no_click_prob(DetectorSpec(7), beta * math.sqrt(0.08), k, dim=n + 1)
            for k in range(n + 1)
        )
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_displaced_operator_padding_reaches_tolerance():
    op = displaced_no_click_operator(EYE, 10.0, 6)
    assert np.allclose(op.entries, op.entries.conj().T)
    ev = np.linalg.eigvalsh(op.entries)
    assert ev.min() > -1e-12 and ev.max() < 1 + 1e-12


def test_bloch_at_zero_points_along_z():
    for det in (DetectorSpec(1), EYE, DetectorSpec(3, 0.5)):
        v = bloch_vector(det, 0.0)
        assert v.x == 0 and v.y == 0
    assert bloch_vector(DetectorSpec(1), 0.0).z == pytest.approx(1.0)


def test_single_photon_detector_bloch_turns_to_x():
    v = bloch_vector(DetectorSpec(1, 0.08), math.sqrt(12.5))
    assert abs(v.z) <= 1e-12
    assert abs(v.y) == 0
    assert v.norm < 1


def test_single_photon_detector_bloch_closed_form():
    # v_z = e^{-eta x} (eta - eta^2 x) and |v_x| = 2 eta sqrt(x) e^{-eta x} for theta = 1
    eta = 0.3
    for x in (0.5, 2.0, 5.0):
        v = bloch_vector(DetectorSpec(1, eta), math.sqrt(x))
        assert v.z == pytest.approx(math.exp(-eta * x) * (eta - eta**2 * x), abs=1e-12)
        assert abs(v.x) == pytest.approx(2 * eta * math.sqrt(x) * math.exp(-eta * x), abs=1e-12)


def test_eye_bloch_z_vanishes_at_theta_over_eta():
    v = bloch_vector(EYE, math.sqrt(7 / 0.08))
    assert abs(v.z) <= 1e-10 * v.norm
    assert abs(v.x) > 0.1


def test_bloch_phase_behaviour():
    base = bloch_vector(EYE, 9.0)
    for phi in np.linspace(0, 2 * math.pi, 7):
        v = bloch_vector(EYE, 9.0 * np.exp(1j * phi))
        assert v.z == pytest.approx(base.z, abs=1e-12)
        assert math.hypot(v.x, v.y) == pytest.approx(math.hypot(base.x, base.y), abs=1e-12)
    v = bloch_vector(EYE, 10j)
    assert abs(v.x) < 1e-12 and abs(v.y) > 0.1


def test_bloch_vectors_are_not_unit():
    for a in (0.5, 3.0, 9.35):
        assert bloch_vector(EYE, a).norm < 1
