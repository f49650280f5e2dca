"""Handwritten Arabic character recognition from scratch.

A three-stage convolutional network (7x7 kernels, max-pooling) trained by
mini-batch SGD, a dropout-regularized one-vs-rest linear SVM over the
1024-d hidden features, and k-means grouping of the 28 letter classes into
13 master-stroke clusters.
"""

from .clustering import (ClusterAssignment, adjusted_rand_index, class_centroids,
                         compare_partition, kmeans, reference_partition)
from .dataset import (CLASS_NAMES, DatasetSplit, GlyphSample, Glyphs, load_csv, resize_to_64,
                      synth_dataset)
from .evaluation import EvalReport, confusion_pairs, evaluate, per_class_table
from .model import Model
from .optim import SgdConfig, TrainHistory, sgd_step, train
from .svm import SvmModel, SvmTrainConfig, svm_predict, svm_scores, svm_train
from .tensor import ShapeError

__all__ = [
    "CLASS_NAMES", "ClusterAssignment", "DatasetSplit", "EvalReport", "GlyphSample", "Glyphs",
    "Model", "SgdConfig", "ShapeError", "SvmModel", "SvmTrainConfig", "TrainHistory",
    "adjusted_rand_index", "class_centroids", "compare_partition", "confusion_pairs", "evaluate",
    "kmeans", "load_csv", "per_class_table", "reference_partition", "resize_to_64", "sgd_step",
    "svm_predict", "svm_scores", "svm_train", "synth_dataset", "train",
]
