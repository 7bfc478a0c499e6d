"""Simulator and estimators for polarization-entangled photon pairs
produced by four-wave mixing in a crystal, measured through waveplate
and polarizing-beamsplitter analyzer chains."""

__version__ = "0.1.0"

from .analyzer import (
    AnalyzerSetting,
    ArmSetting,
    WaveplateSetting,
    arm_projector,
    hwp_jones,
    joint_probability,
    outcome_probabilities,
    qwp_jones,
)
from .crystal import (
    CrystalOrientation,
    PathAmplitudes,
    SpectralConfig,
    WeightModelParams,
    electronic_tensor_lab,
    generate_sas_state,
    path_amplitudes,
    raman_singles_polarization,
    raman_tensor_lab,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateInput,
    IncompleteSettings,
    InsufficientData,
    InvalidMixture,
    InvalidRates,
    SasimError,
)
from .estimators import (
    ChshSettings,
    OptimalChsh,
    analytic_E,
    analytic_chsh,
    chsh_S,
    chsh_from_counts,
    chsh_maximum,
    correlation_E,
    predict_optimal_S,
)
from .polarization import (
    BELL_STATES,
    BellDecomposition,
    DensityMatrix4,
    JonesVector,
    MAXIMALLY_MIXED,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    TwoPhotonState,
    bell_decomposition,
    density_from_pure,
    fidelity_to_pure,
    mix,
    normalize,
    purity,
    schmidt_state,
    tensor_product,
    werner,
)
from .simulate import (
    CoincidenceCounts,
    DelayHistogram,
    SourceRates,
    ValueWithError,
    delay_histogram,
    derive_seed,
    g2_zero,
    simulate_counts,
    simulate_settings,
)
from .tomography import (
    MleResult,
    TomographySet,
    born_probabilities,
    project_to_physical,
    tomography_linear,
    tomography_mle,
    tomography_settings,
)
