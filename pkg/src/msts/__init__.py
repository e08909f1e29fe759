"""Feature subset selection for multivariate time series by merit of single-feature classifier outputs."""

from .classify import make_folds, single_feature_predictions, cv_accuracy, test_accuracy
from .dataset import TimeSeriesDataset, TabularDataset, parse_ts, read_ts, read_split, parse_tabular
from .dtw import WarpingParams, DistanceTensor, compute_distance_tensor, dtw_univariate
from .merit import CorrelationModel, build_correlation_model, merit, msts_select, wrapper_select

__version__ = "0.1.0"
