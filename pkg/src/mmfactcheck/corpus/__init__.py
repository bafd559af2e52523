from .build import (
    DatasetLabel,
    DatasetRecord,
    FilterDecision,
    GroundTruthEvidence,
    GroundTruthKeyPoint,
    ImageDims,
    QCDecision,
    Split,
    build_corpus,
    extract_annotations,
    filter_article,
    map_label,
    qc_checks,
    read_records,
    split_dataset,
    write_records,
)
from .reformat import TaggedArticle, classify_url, reformat_article

__all__ = [
    "DatasetLabel",
    "DatasetRecord",
    "FilterDecision",
    "GroundTruthEvidence",
    "GroundTruthKeyPoint",
    "ImageDims",
    "QCDecision",
    "Split",
    "build_corpus",
    "extract_annotations",
    "filter_article",
    "map_label",
    "qc_checks",
    "read_records",
    "split_dataset",
    "write_records",
    "TaggedArticle",
    "classify_url",
    "reformat_article",
]
