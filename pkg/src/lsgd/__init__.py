"""Out-of-core multiclass linear classification.

Data arrives as a stream of fixed-size blocks; each block is k-means
partitioned and every cluster trains its own one-vs-rest hinge-loss SGD
model. Prediction routes a point to the nearest cluster center within each
block's ensemble and majority-votes across blocks. Everything is seeded, so
models are byte-identical across runs and worker counts.
"""

from .dataio import (
    BlockSpec,
    DataBlock,
    DataFormatError,
    DatasetHeader,
    LabeledPoint,
    array_blocks,
    block_size_for_budget,
    iter_dense_binary,
    iter_sparse_text,
    read_dense_binary,
    read_dense_header,
    read_sparse_text,
    scan_sparse_text,
    split_blocks,
    write_dense_binary,
    write_sparse_text,
)
from .ensemble import KSgdModel, LocalModel, ksgd_predict, ksgd_predict_batch, ksgd_train
from .evaluate import BenchConfig, EvalReport, bench_compare, evaluate, evaluate_arrays, make_blobs
from .incremental import (
    BlockProvenance,
    IncKSgdModel,
    inc_predict,
    inc_predict_batch,
    inc_train,
    majority_vote,
    predict_labels,
)
from .linear import (
    OvrModel,
    SgdParams,
    hinge_loss,
    objective,
    ovr_predict,
    ovr_predict_batch,
    ovr_train,
    sgd_train_binary,
    subgradient,
)
from .partition import (
    CentroidSet,
    ClusterSlice,
    Partitioning,
    assign_to_centers,
    kmeans_fit,
    nearest_center,
    partition_block,
)
from .serialize import bytes_to_model, load_model, model_to_bytes, save_model

__version__ = "0.1.0"

__all__ = [
    "BlockSpec",
    "BlockProvenance",
    "BenchConfig",
    "CentroidSet",
    "ClusterSlice",
    "DataBlock",
    "DataFormatError",
    "DatasetHeader",
    "EvalReport",
    "IncKSgdModel",
    "KSgdModel",
    "LabeledPoint",
    "LocalModel",
    "OvrModel",
    "Partitioning",
    "SgdParams",
    "array_blocks",
    "assign_to_centers",
    "bench_compare",
    "block_size_for_budget",
    "evaluate",
    "evaluate_arrays",
    "hinge_loss",
    "inc_predict",
    "inc_predict_batch",
    "inc_train",
    "iter_dense_binary",
    "iter_sparse_text",
    "kmeans_fit",
    "ksgd_predict",
    "ksgd_predict_batch",
    "ksgd_train",
    "load_model",
    "majority_vote",
    "make_blobs",
    "bytes_to_model",
    "model_to_bytes",
    "nearest_center",
    "objective",
    "ovr_predict",
    "ovr_predict_batch",
    "ovr_train",
    "partition_block",
    "predict_labels",
    "read_dense_binary",
    "read_dense_header",
    "read_sparse_text",
    "save_model",
    "scan_sparse_text",
    "sgd_train_binary",
    "split_blocks",
    "subgradient",
    "write_dense_binary",
    "write_sparse_text",
]
