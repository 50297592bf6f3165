"""Penalized least-squares estimation of the distribution of independent
categorical sequences over Haar and interval-partition models, with
change-point detection."""

__version__ = "0.1.0"

from .calibration import CalibrationPath, calibrate_neh, calibrate_segmentation
from .domain import (CategoricalSequence, decode, encode, frobenius_sq_diff,
                     simplex_project)
from .haar import (CoefficientMatrix, HaarIndex, canonical_order, forward, haar_vector,
                   inverse, transform_matrix)
from .segmentation import (Partition, SegmentStats, dp_optimal_partitions, ei_select,
                           hybrid_detect, jump_set, segment_cost)
from .selection import (PenaltyFamily, PenaltySpec, SelectionResult, eh_select,
                        neh_collection_dimension, neh_select, reconstruct)

__all__ = [
    "CalibrationPath", "CategoricalSequence", "CoefficientMatrix", "HaarIndex",
    "Partition", "PenaltyFamily", "PenaltySpec", "SegmentStats", "SelectionResult",
    "calibrate_neh", "calibrate_segmentation", "canonical_order", "decode",
    "dp_optimal_partitions", "eh_select", "ei_select", "encode", "forward",
    "frobenius_sq_diff", "haar_vector", "hybrid_detect", "inverse", "jump_set",
    "neh_collection_dimension", "neh_select", "reconstruct", "segment_cost",
    "simplex_project", "transform_matrix",
]
