"""Pathwise rough-path integration for cadlag price paths."""

from .controlled import (
    C2Function,
    ControlledPath,
    DupireFunctional,
    add_finite_rvar,
    builtin_function,
    controlled_from_dupire,
    controlled_from_function,
    controlled_norm,
)
from .errors import ConfigError, ContractError, DomainError, PathwiseError, ResolutionExceeded
from .integration import (
    IntegralPath,
    QuadraticVariation,
    compensated_rough_integral,
    discrete_qv,
    follmer_bracket,
    integration_by_parts_defect,
    left_point_integral,
    rough_integral,
    rough_ito_defect,
    young_integral,
)
from .partitions import (
    NestedPartitionSequence,
    Partition,
    discretize,
    lebesgue_sequence,
    mesh,
    restrict,
)
from .paths import (
    CadlagPath,
    GeneratorConfig,
    augment_auxiliary,
    fbm_increments,
    generate,
    market_weights,
)
from .rie import (
    ExperimentConfig,
    RieReport,
    ito_consistency,
    rie_report,
    semimartingale_experiment,
    young_semimartingale_experiment,
)
from .roughpath import (
    AreaProcess,
    RoughPathTriple,
    area_n,
    chen_defect,
    limit_area,
    rough_distance,
    rough_seminorm,
)
from .strategies import (
    GeneratingFunction,
    MixingMeasure,
    Strategy,
    capital_process,
    cover_portfolio,
    entropy,
    functionally_generated,
    gamma_path,
    generated_strategies,
    quadratic,
    self_financing_from_theta,
    stability_gap,
)
from .variation import (
    VariationTable,
    p_variation,
    superadditivity_defect,
    two_param_p_variation,
    variation_control,
)

__version__ = "0.1.0"
