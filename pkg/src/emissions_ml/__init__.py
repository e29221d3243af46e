"""Tabular CO2-emission regression: trees, forests, boosted trees, a dense
network, voting ensembles and an MAE comparison harness."""

__version__ = "0.1.0"

from .dataset import ColumnSchema, SplitSpec, Table, drop_null_rows, load_csv, train_test_split
from .ensemble import VotingRegressor, fit_members, predict_vote
from .forest import ForestConfig, ForestModel, fit_forest, predict_forest
from .gbt import GbtConfig, GbtModel, fit_gbt, predict_gbt
from .metrics import ComparisonConfig, compare_methods, mae, mse_rmse
from .nn import MlpArchitecture, MlpConfig, MlpModel, TrainConfig, count_parameters, fit_mlp
from .preprocess import PreprocessPipeline
from .tree import TreeConfig, best_split, fit_tree, predict_tree
