"""Model families, cross-validated grid search and the model store."""
from .metrics import auc
from .models import Family, PredictiveModel, resolve_hyperparameters, train
from .search import GridCell, GridSpec, ModelRecord, default_grid, grid_search, sort_records
from .store import load_models, save_models
from .trees import Tree

__all__ = [
    "Family", "GridCell", "GridSpec", "ModelRecord", "PredictiveModel", "Tree",
    "auc", "default_grid", "grid_search", "load_models", "resolve_hyperparameters",
    "save_models", "sort_records", "train",
]
