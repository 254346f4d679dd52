"""E-value based sequential change detection with FDR control on reconfigurable sensor networks."""
from .boosting import BoostQuery, BoostResult, boost_factor, boost_factors, boosted_evalues, in_B1, in_B2
from .config import RunConfig, load_config, parse_config
from .detector import DetectionReport, ebh_select, ebh_threshold
from .evalues import EValueEngine, EValueVector, SensorState, evalue_direct
from .metrics import MetricsSummary, compute_metrics
from .records import StreamDetector, read_trace, write_trace
from .models import (
    MODEL_1,
    MODEL_2,
    EmpiricalLaw,
    FixedNetworkVAR,
    History,
    IidMeanShift,
    LogNormalLaw,
    ModelSpec,
    PointMassLaw,
    SharedFactor,
    WithinSensorAR,
)
from .simulation import RunTrace, monte_carlo, replication_rng, sample_change_points, simulate_run, step_policy
from .types import NEVER, ActiveSetLedger, ChangePoint, Method, PolicyKind, PolicySpec, ScenarioConfig

__version__ = "0.1.0"
