"""Multi-agent multimodal fact-checking with deterministic record/replay providers."""

from .errors import FactCheckError, SchemaViolation
from .model import (
    BinaryLabel,
    EvidenceItem,
    EvidencePool,
    Explanation,
    ImageAnalysisResult,
    MultimodalClaim,
    Plan,
    ReasoningOutput,
    SourceReliability,
    VeracityLabel,
    collapse_to_binary,
)
from .schemas import validate_agent_output

__version__ = "0.1.0"

__all__ = [
    "FactCheckError",
    "SchemaViolation",
    "BinaryLabel",
    "EvidenceItem",
    "EvidencePool",
    "Explanation",
    "ImageAnalysisResult",
    "MultimodalClaim",
    "Plan",
    "ReasoningOutput",
    "SourceReliability",
    "VeracityLabel",
    "collapse_to_binary",
    "validate_agent_output",
]
