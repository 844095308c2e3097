"""lgcalab: lattice-gas cellular automata, CA rule-space mining with PCA,
and a probabilistic process-algebra fragment compiled to Markov chains."""

__version__ = "0.1.0"

from .lattice import (
    HEX6,
    SQUARE4,
    Direction,
    LatticeState,
    Topology,
    UnitsConfig,
    directions,
    neighbor,
    opposite,
    propagate,
)
from .dynamics import (
    FHP,
    HPP,
    CollisionTable,
    RandomPolicy,
    build_collision_table,
    fhp_collide_site,
    fhp_three_body_flag,
    fhp_two_body_flag,
    hpp_collide_site,
    random_state,
    step,
)
from .observables import (
    FhpConstants,
    MacroField,
    OccupationField,
    ShearWaveResult,
    ViscosityPrediction,
    equilibrium_occupation,
    estimate_occupation,
    macro_fields,
    measure_viscosity,
    predicted_viscosity,
    pressure,
)
from .eca import (
    BOUNDARY_PERIODIC,
    BOUNDARY_ZERO,
    EcaRule,
    PatternTable,
    SpacetimeDiagram,
    apply_rule,
    build_pattern_table,
    evolve,
    single_seed_row,
)
from .pca import (
    DataMatrix,
    NormMatrix,
    Spectrum,
    analyze_rulespace,
    center,
    column_variances,
    correlation_matrix,
    eig_sym,
    kl_error,
)
from .wsccs import (
    ACTIVE,
    PASSIVE,
    TICK,
    AgentDef,
    Branch,
    ChainAnalysis,
    ProcessState,
    TransitionMatrix,
    analyze,
    colony_defs,
    colony_matrix,
    colony_state,
    compose_step,
    simulate,
)
from .errors import NumericalError
