"""
Decision Stream: a learner that grows a directed acyclic graph of decision
rules by alternating statistical splitting and merging of leaves.
"""
from .config import settings
from .data.dataset import Dataset, load_csv
from .stream.graph import DsModel, predict_batch, predict_one
from .training.trainer import TrainConfig, train

__version__ = "1.0.0"
