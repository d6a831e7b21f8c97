"""Channel-state duality for temporal and spatial quantum correlations."""
from .channels import Evolution, apply, canonicalize, renormalize
from .correlations import (
    SpatialScenario,
    TemporalScenario,
    spatial_correlation,
    temporal_correlation,
    correlation_duality_check,
    postselected_duality_check,
    weak_spatial_correlation,
    weak_temporal_correlation,
)
from .duality import BipartiteEnsemble, evolution_to_state, state_to_evolution
from .weak import GaussianMeter, WeakSetup, exact_meter_correlation, limit_meter_correlation

__version__ = "0.1.0"
