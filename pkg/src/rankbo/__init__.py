"""Bayesian optimization with deep ranking ensembles."""

from .acquisition import AcqKind, acq_average_rank, acq_ei, acq_lcb, select_next
from .backend import backend_name
from .benchmarks import (MetaDataset, MetricCurve, average_rank_metric,
                         load_meta_dataset, make_sinusoid_task,
                         normalized_regret, save_meta_dataset,
                         sinusoid_meta_dataset)
from .bo import BoHistory, Task, run_bo, run_random_search
from .deepset import DeepSetParams, SupportSet, deepset_backward, deepset_encode, deepset_init
from .nn import (AdamState, GradBundle, MlpParams, adam_init, adam_step,
                 mlp_backward, mlp_forward, mlp_init)
from .ranking import (LossKind, WeightScheme, list_weight, listwise_loss,
                      listwise_permutation_prob, pairwise_loss, pointwise_loss,
                      rank_scores, regression_mse, true_rank_permutation)
from .surrogate import (DreConfig, DreModel, RankPrediction, fine_tune,
                        init_model, load_model, meta_train, predict,
                        save_model, score_query)

__version__ = "0.1.0"
