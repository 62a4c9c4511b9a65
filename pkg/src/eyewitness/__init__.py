"""Entanglement witnessing with displaced threshold detectors and the human eye.

The package models threshold detectors (including an eye with a 7-photon
threshold and 8% efficiency), the phase-randomized witness built from displaced
detectors, separability bounds from calibration measurements, and a heralded
down-conversion source, with independent closed-form and Monte Carlo checks.
"""

from .bounds import (
    CalibrationSet,
    MeasuredProbabilities,
    WitnessReport,
    bound_p_star_B,
    bound_pij,
    calibration_set,
    delta_w,
    find_calibration_amplitudes,
    measure_probabilities,
    w_ppt_full,
    w_ppt_qubit,
    witness_report,
)
from .detectors import (
    EYE,
    BlochVector,
    DetectorSpec,
    bloch_vector,
    displaced_no_click_prob,
    no_click_prob_derivative_form,
    no_click_prob_fock,
    povm_ns_operator,
    povm_s_operator,
    seen_prob_coherent,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DegenerateBoundError,
    DimensionError,
    EyeWitnessError,
    PostSelectionError,
    TruncationError,
)
from .fock import (
    FockOperator,
    FockVector,
    TwoModeState,
    displacement_matrix,
    expectation,
    loss_channel,
    split_single_mode,
    tensor,
    thermal_state,
)
from .jets import JetValue
from .montecarlo import McConfig, McEstimate, estimate_measured_probabilities, estimate_witness, sample_heralded_counts
from .source import (
    ExperimentParams,
    expected_w_closed_form,
    experiment_state,
    heralded_state,
    photon_number_distribution,
    w_thermal_closed_form,
)
from .witness import SigmaObservable, WitnessMatrix, sigma_observable, witness_elements, witness_expectation, witness_matrix

__version__ = "0.1.0"
