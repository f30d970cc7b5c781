"""
Quantum Module - Channels and Fluctuation Relations

Dense linear algebra, Kraus channels, two-point statistics, and the exact
fluctuation and feedback relations built on them.
"""

from .linalg_core import (
    ComplexMatrix,
    DensityMatrix,
    HermitianOperator,
    Spectrum,
    completely_mixed,
    expectation_value,
    hs_inner,
    operator_function,
    random_density_matrix,
    random_hermitian,
    spectral_decompose,
    tensor_product,
)
from .channels import (
    ChannelReport,
    KrausChannel,
    adjoint,
    apply,
    apply_operator,
    compose,
    random_channel,
    standard_channel,
    tensor,
    validate,
)
from .twopoint import (
    ConditionalMatrix,
    DeltaHistogram,
    DeltaSign,
    GibbsState,
    JointDistribution,
    conditional_probs,
    delta_histogram,
    gibbs,
    joint_average,
    joint_log_average,
    product_spectrum,
    sample_trajectories,
)
from .fluctuation import (
    CrooksReport,
    CrooksWorkTable,
    HeatExchangeReport,
    JarzynskiReport,
    WorkStatistics,
    crooks_check,
    crooks_work_form,
    detailed_balance,
    entropy_production,
    heat_exchange_check,
    heat_exchange_general,
    jarzynski_check,
    mixed_state_crooks,
    necessity_probe,
    tasaki_two_temperature,
    work_statistics,
)
from .feedback import (
    ErrorModel,
    FeedbackProtocol,
    Measurement,
    MeasurementFlags,
    MutualInformation,
    ProtocolResult,
    WorkFormFeedback,
    jsu_check,
    jsu_error_check,
    mutual_information,
    post_measurement_state,
    run_protocol,
    validate_measurement,
    work_form_feedback,
)

__all__ = [
    # linalg_core
    'ComplexMatrix', 'DensityMatrix', 'HermitianOperator', 'Spectrum',
    'completely_mixed', 'expectation_value', 'hs_inner', 'operator_function',
    'random_density_matrix', 'random_hermitian', 'spectral_decompose', 'tensor_product',
    # channels
    'ChannelReport', 'KrausChannel', 'adjoint', 'apply', 'apply_operator', 'compose',
    'random_channel', 'standard_channel', 'tensor', 'validate',
    # twopoint
    'ConditionalMatrix', 'DeltaHistogram', 'DeltaSign', 'GibbsState', 'JointDistribution',
    'conditional_probs', 'delta_histogram', 'gibbs', 'joint_average', 'joint_log_average',
    'product_spectrum', 'sample_trajectories',
    # fluctuation
    'CrooksReport', 'CrooksWorkTable', 'HeatExchangeReport', 'JarzynskiReport', 'WorkStatistics',
    'crooks_check', 'crooks_work_form', 'detailed_balance', 'entropy_production', 'heat_exchange_check',
    'heat_exchange_general', 'jarzynski_check', 'mixed_state_crooks', 'necessity_probe',
    'tasaki_two_temperature', 'work_statistics',
    # feedback
    'ErrorModel', 'FeedbackProtocol', 'Measurement', 'MeasurementFlags', 'MutualInformation',
    'ProtocolResult', 'WorkFormFeedback', 'jsu_check', 'jsu_error_check', 'mutual_information',
    'post_measurement_state', 'run_protocol', 'validate_measurement', 'work_form_feedback',
]
