"""Zero-shot listwise learning to rank for recommendation.

The trainer maximises a power-law order-statistic likelihood over the factor
matrices alone, without reading any ratings. The package also ships MF,
BPR-MF and heuristic baselines, MAE and Matthew-effect metrics, and an
experiment harness with a CLI (``listrank``).
"""

from .baselines import HeuristicPredictor, bpr_pair_prob, heuristic_predict, train_bpr, train_mf
from .dataset import Rating, RatingsDataset, SplitSpec, load_ratings, rating_histogram, split_train_test
from .errors import DataError, ListrankError, NumericError, UsageError
from .factors import FactorModel, InitSpec, init_factors, load_model, predict_rating, project, save_model
from .harness import ExperimentConfig, emit_report, run_experiment, sweep
from .kernels import BACKEND
from .listwise import PairGradient, TrainConfig, ascend_sweeps, log_objective, pair_gradient, train_zeroshot
from .metrics import MetricsReport, loglog_slope, mae, matthew_degree, topk_recommend
from .orderstat import DensitySpec, joint_density, normalization_check

__version__ = "0.1.0"
