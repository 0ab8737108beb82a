"""Missing-value recovery for dissolved-gas records with an autoencoder and
evolutionary search (GA, PSO), plus a condition classifier and a sweep harness."""

__version__ = "0.1.0"

from .data import GASES, Dataset, GasRecord, Label, NormStats, fit_normalizer, normalize, \
    denormalize, within_std_correct, read_records, write_records
from .synthgen import GenConfig, RuleTable, generate, apply_rule, mask_missing
from .mlp import LayerSpec, Network, TrainConfig, forward, sse, average_error, gradient, train
from .autoenc import AutoencoderModel, train_autoencoder, known_error, contractivity_probe
from .evo import Bounds, GAConfig, PSOConfig, BestResult, ga_minimize, pso_minimize
from .imputer import ImputeConfig, ImputeResult, em_objective, impute, impute_baseline, grid_oracle
from .classifier import ClassifierModel, train_classifier, classify, evaluate_accuracy
from .bench import SweepConfig, SweepReport, run_sweep, compare_optimizers
