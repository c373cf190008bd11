from .profiles import (
    MESH_SERVICE,
    ProfileSet,
    ServiceProfile,
    WorkloadModel,
    calibrate_default_profiles,
    derive_topology,
    load_profiles,
)
from .scenario import (
    ScenarioConfig,
    ScenarioError,
    TreatmentSpec,
    apply_scenario_treatment,
    controlled_differences,
    patch_descriptor,
)
