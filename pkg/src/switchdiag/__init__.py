"""Structural fault diagnosability analysis of switched modular battery packs.

Core layers:

* :mod:`switchdiag.structural` -- bipartite structural models,
  Dulmage-Mendelsohn decomposition, detectability/isolability calculus.
* :mod:`switchdiag.switched` -- mode-guarded templates, configuration
  flattening, mode-class and configuration reduction.
* :mod:`switchdiag.bimmc` -- generator for the battery-integrated modular
  converter models (sensor setups I-IV) and fault aggregation.
* :mod:`switchdiag.pipeline` -- the setups x configurations sweep with
  compact, table-style reporting.
* :mod:`switchdiag.residuals` -- numerical residual simulation on a
  single-submodule cell plant.
"""

from .bimmc import (
    NOMINAL_CELL,
    CellParameters,
    FaultCatalogue,
    SensorSetup,
    aggregate_report,
    generate,
    sensor_setup,
)
from .errors import (
    InputError,
    InternalConsistencyError,
    NonStationaryError,
    OracleBoundError,
    ResidualModeError,
    SimulationDivergedError,
)
from .pipeline import (
    CompactIsolability,
    SweepReport,
    analyze_configuration,
    compact,
    render,
    render_report,
    sweep,
)
from .residuals import (
    FaultStep,
    PlantSignals,
    ResidualTrace,
    SimScenario,
    residual_cell_current,
    residual_redundant_output,
    residual_setup1,
    simulate_plant,
    steady_state_gain,
)
from .structural import (
    DmDecomposition,
    IsolabilityMatrix,
    IsolabilityReport,
    Matching,
    StructuralModel,
    detectability_set,
    dm_decompose,
    is_isolable,
    isolability_matrix,
    isolability_partition,
    max_matching,
    oracle_plus_membership,
    partition_matrix,
    plus_part,
)
from .switched import (
    Configuration,
    GlobalEquation,
    ModeGuardedEquation,
    ReducedConfiguration,
    SubmoduleTemplate,
    SwitchedModel,
    canonicalize,
    enumerate_reduced_configurations,
    instantiate,
    parse_configuration,
    representative_configuration,
    structural_mode_classes,
)

__version__ = "0.1.0"
