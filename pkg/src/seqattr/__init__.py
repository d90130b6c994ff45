"""Attention-LSTM sequence classification with value-level attribution.

Pipeline: load labeled multivariate event sequences, train an
attention-equipped LSTM binary classifier, then aggregate the learned
per-event attention into pairwise value-level heat matrices and
timestep-partitioned pattern graphs, sliceable by attention band, time
range, and attribute subset.
"""

from seqattr.data import (
    AttributeSchema,
    Dataset,
    Event,
    SequenceInstance,
    bin_level,
    encode_event,
    infer_schema,
    load_dataset,
    save_dataset,
)
from seqattr.model import (
    AttentionRecord,
    ModelCheckpoint,
    TrainConfig,
    extract_attentions,
    predict,
    train,
)
from seqattr.attribution import (
    SliceSpec,
    build_grid,
    epoch_comparison,
    select_events,
    tpartite_combined,
    tpartite_single,
)
from seqattr.synth import PlantSpec, generate, oracle_top_cells

__version__ = "0.1.0"

__all__ = [
    "AttributeSchema",
    "Dataset",
    "Event",
    "SequenceInstance",
    "bin_level",
    "encode_event",
    "infer_schema",
    "load_dataset",
    "save_dataset",
    "AttentionRecord",
    "ModelCheckpoint",
    "TrainConfig",
    "extract_attentions",
    "predict",
    "train",
    "SliceSpec",
    "build_grid",
    "epoch_comparison",
    "select_events",
    "tpartite_combined",
    "tpartite_single",
    "PlantSpec",
    "generate",
    "oracle_top_cells",
]
