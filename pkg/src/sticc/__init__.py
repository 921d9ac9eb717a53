"""Spatial Toeplitz inverse covariance-based clustering."""
__version__ = "0.1.0"

from .dataset import ColumnSpec, GeoDataset, SubregionSet, build_subregions, knn, load_csv, save_csv
from .em import FitResult, SticcConfig, fit
from .model import ClusterModel, ToeplitzPrecision

__all__ = [
    "ClusterModel", "ColumnSpec", "FitResult", "GeoDataset", "SticcConfig", "SubregionSet",
    "ToeplitzPrecision", "build_subregions", "fit", "knn", "load_csv", "save_csv",
]
