from .base import Learner  # noqa: F401
from .config import ExperimentConfig, dump_config, parse_config  # noqa: F401
from .detectors import Adwin, Ddm  # noqa: F401
from .evaluation import PrequentialTrace, cl_matrix, prequential_run  # noqa: F401
from .metrics import (
    ConfusionMatrix,
    KappaMatrix,
    RollingWindow,
    acc_final,
    anytime_accuracy,
    bwt,
    k_avg,
    kappa,
)  # noqa: F401
from .runner import aggregate_runs, run_grid  # noqa: F401
from .streams import (
    Scenario,
    build_geometry_scenario,
    build_real_scenario,
    build_virtual_scenario,
)  # noqa: F401
