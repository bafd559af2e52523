"""Domain types shared across the pipeline.

Every type is a frozen dataclass. ``to_dict``/``from_dict`` give a JSON-ready
representation (enums as their values, dates as ISO-8601 strings, tuples as
lists) and round-trip exactly on valid values.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import enum
import json
import re
import types
import typing
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Optional
from urllib.parse import urlsplit

import tldextract

__all__ = [
    "VeracityLabel",
    "BinaryLabel",
    "SourceReliability",
    "Modality",
    "ImageRelationship",
    "MultimodalClaim",
    "EvidenceItem",
    "EvidencePool",
    "PlanStep",
    "ValidationItem",
    "SearchItem",
    "Plan",
    "ImageMatchAnalysis",
    "ImageAnalysisResult",
    "ReasoningStep",
    "DirectFactCheck",
    "ReasoningOutput",
    "KeyPoint",
    "Explanation",
    "collapse_to_binary",
    "check_confidence",
    "registrable_domain",
    "parse_date",
    "to_json",
]

EVIDENCE_ID_RE = re.compile(r"^(?:\d+-\d+|img-\d+)$")


class VeracityLabel(str, enum.Enum):
    TRUE = "True"
    FALSE = "False"
    UNPROVEN = "Unproven"


class BinaryLabel(str, enum.Enum):
    TRUE = "true"
    NOT_TRUE = "not_true"


class SourceReliability(str, enum.Enum):
    RELIABLE = "reliable"
    UNRELIABLE = "unreliable"
    SATIRE = "satire"
    UNSURE = "unsure"
    FACTCHECK = "factcheck"


class Modality(str, enum.Enum):
    TEXT = "text"
    IMAGE = "image"


class ImageRelationship(str, enum.Enum):
    SAME_SOURCE = "PotentiallyFromSameSource"
    SAME_EVENT = "SameEventDifferentContent"
    NO_RELATION = "NoCloseRelationship"

    @property
    def is_related(self) -> bool:
        return self is not ImageRelationship.NO_RELATION


def collapse_to_binary(label: VeracityLabel) -> BinaryLabel:
    """Map the three-way verdict onto ``true`` vs ``not_true``."""
    return BinaryLabel.TRUE if VeracityLabel(label) is VeracityLabel.TRUE else BinaryLabel.NOT_TRUE


def check_confidence(value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= 5:
        raise ValueError(f"confidence must be an integer in [1, 5], got {value!r}")
    return value


_TLD = tldextract.TLDExtract(suffix_list_urls=(), cache_dir=None)


@lru_cache(maxsize=4096)
def registrable_domain(url: str) -> str:
    """Lowercased registrable host (eTLD+1) of ``url``; falls back to the bare host."""
    host = urlsplit(url if "://" in url else f"//{url}").hostname or ""
    host = host.lower()
    parts = _TLD(host)
    top = parts.top_domain_under_public_suffix
    return (top or host).lower()


def parse_date(value: Any) -> Optional[dt.date]:
    """Strict ISO-8601 calendar-date parsing; ``None`` and ``""`` mean absent."""
    if value is None or value == "":
        return None
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return dt.date.fromisoformat(str(value).strip())


@dataclass(frozen=True)
class MultimodalClaim:
    claim_text: str
    post_text: str = ""
    post_image: Optional[str] = None
    claim_date: Optional[dt.date] = None
    claim_id: str = ""

    def __post_init__(self):
        if not self.claim_text or not self.claim_text.strip():
            raise ValueError("claim_text must be non-empty")
        if self.post_image == "":
            object.__setattr__(self, "post_image", None)


@dataclass(frozen=True)
class EvidenceItem:
    evidence_id: str
    modality: Modality
    content: str
    source_url: str
    reliability: SourceReliability
    origin_query: str
    publish_date: Optional[dt.date] = None
    retrieval_round: int = 0
    source_domain: str = ""

    def __post_init__(self):
        if not self.content or not self.content.strip():
            raise ValueError(f"evidence {self.evidence_id}: content must be non-empty")
        if self.retrieval_round < 0:
            raise ValueError("retrieval_round must be non-negative")
        domain = registrable_domain(self.source_url)
        if not self.source_domain:
            object.__setattr__(self, "source_domain", domain)
        elif self.source_domain != domain:
            raise ValueError(
                f"source_domain {self.source_domain!r} does not match {self.source_url!r}"
            )


@dataclass(frozen=True)
class EvidencePool:
    role: str = "reliable"
    items: tuple[EvidenceItem, ...] = ()

    def __post_init__(self):
        if self.role not in ("reliable", "useful"):
            raise ValueError(f"unknown pool role {self.role!r}")
        ids = [e.evidence_id for e in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("evidence ids must be unique within a pool")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def ids(self) -> list[str]:
        return [e.evidence_id for e in self.items]

    def get(self, evidence_id: str) -> Optional[EvidenceItem]:
        for e in self.items:
            if e.evidence_id == evidence_id:
                return e
        return None

    def extended(self, new: typing.Iterable[EvidenceItem]) -> "EvidencePool":
        """New pool with ``new`` appended, skipping ids already present."""
        seen = set(self.ids())
        extra = []
        for e in new:
            if e.evidence_id not in seen:
                seen.add(e.evidence_id)
                extra.append(e)
        return EvidencePool(self.role, self.items + tuple(extra))


@dataclass(frozen=True)
class PlanStep:
    step: str
    method: str = ""
    details: str = ""


@dataclass(frozen=True)
class ValidationItem:
    sentence: str
    explanation: str = ""


@dataclass(frozen=True)
class SearchItem:
    information_needed: str


@dataclass(frozen=True)
class Plan:
    reasoning_steps: tuple[PlanStep, ...] = ()
    validation_list: tuple[ValidationItem, ...] = ()
    search_list: tuple[SearchItem, ...] = ()

    def __post_init__(self):
        if len(self.validation_list) > 3 or len(self.search_list) > 3:
            raise ValueError("validation_list and search_list hold at most 3 items each")
        overlap = {v.sentence.strip() for v in self.validation_list} & {
            s.information_needed.strip() for s in self.search_list
        }
        if overlap:
            raise ValueError(f"validation and search lists overlap: {sorted(overlap)}")


@dataclass(frozen=True)
class ImageMatchAnalysis:
    evidence_id: str
    relationship: ImageRelationship
    relationship_reasoning: str = ""
    tampering_probability: Optional[float] = None
    tampering_reasoning: str = ""


@dataclass(frozen=True)
class ImageAnalysisResult:
    matches: tuple[ImageMatchAnalysis, ...] = ()
    tampering_score: Optional[float] = None
    miscaption_score: Optional[float] = None
    deepfake_score: Optional[float] = None
    miscaption_reasoning: str = ""

    def __post_init__(self):
        related = any(m.relationship.is_related for m in self.matches)
        if not related and (self.tampering_score is not None or self.miscaption_score is not None):
            raise ValueError("tampering/miscaption scores require at least one related match")
        for name in ("tampering_score", "miscaption_score"):
            v = getattr(self, name)
            if v is not None and not 0 <= v <= 100:
                raise ValueError(f"{name} must lie in [0, 100]")
        if self.deepfake_score is not None and not 0 <= self.deepfake_score <= 1:
            raise ValueError("deepfake_score must lie in [0, 1]")

    def related_ids(self) -> list[str]:
        return [m.evidence_id for m in self.matches if m.relationship.is_related]


@dataclass(frozen=True)
class ReasoningStep:
    step_name: str
    description: str = ""
    analysis_result: str = ""
    relevant_evidence_summary: str = ""
    relevant_text_evidence_ids: tuple[str, ...] = ()
    relevant_image_evidence_ids: tuple[str, ...] = ()
    # Model-asserted background knowledge; unverifiable, never admitted to a pool.
    knowledge_evidence: tuple[Any, ...] = ()


@dataclass(frozen=True)
class DirectFactCheck:
    analysis_result: str = ""
    relevant_evidence_summary: str = ""
    relevant_text_evidence_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ReasoningOutput:
    claim_paraphrase: str
    label: VeracityLabel
    confidence: int
    steps: tuple[ReasoningStep, ...] = ()
    direct_fact_check: DirectFactCheck = field(default_factory=DirectFactCheck)

    def __post_init__(self):
        check_confidence(self.confidence)

    def cited_text_ids(self) -> list[str]:
        """Cited text evidence ids in first-citation order, without repeats."""
        out: list[str] = []
        for s in self.steps:
            out.extend(s.relevant_text_evidence_ids)
        out.extend(self.direct_fact_check.relevant_text_evidence_ids)
        return list(dict.fromkeys(out))

    def cited_image_ids(self) -> list[str]:
        out: list[str] = []
        for s in self.steps:
            out.extend(s.relevant_image_evidence_ids)
        return list(dict.fromkeys(out))


@dataclass(frozen=True)
class KeyPoint:
    text: str
    cited_evidence_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class Explanation:
    claim_paraphrase: str
    binary_label: BinaryLabel
    label: VeracityLabel
    reasoning_logic: str
    confidence: int
    key_points: tuple[KeyPoint, ...] = ()
    evidence: tuple[EvidenceItem, ...] = ()
    image_analysis: Optional[ImageAnalysisResult] = None

    def __post_init__(self):
        check_confidence(self.confidence)
        if self.label is not VeracityLabel.UNPROVEN and not self.key_points:
            raise ValueError("key_points must be non-empty unless the label is Unproven")
        if self.evidence:
            known = {e.evidence_id for e in self.evidence}
            for kp in self.key_points:
                missing = [i for i in kp.cited_evidence_ids if i not in known]
                if missing:
                    raise ValueError(f"key point cites unknown evidence {missing}")

    def to_json(self) -> str:
        return to_json(self)


# ---------------------------------------------------------------------------
# Generic (de)serialization
# ---------------------------------------------------------------------------


def _to_jsonable(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    return value


def _from_jsonable(tp: Any, value: Any) -> Any:
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _from_jsonable(args[0], value)
    if origin is tuple:
        (inner, _ellipsis) = typing.get_args(tp)
        return tuple(_from_jsonable(inner, v) for v in value)
    if tp is Any:
        return value
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        return tp(value)
    if tp is dt.date:
        return parse_date(value)
    if dataclasses.is_dataclass(tp):
        return from_dict(tp, value)
    return value


@lru_cache(maxsize=None)
def _hints(cls):
    return typing.get_type_hints(cls)


def to_dict(obj: Any) -> Any:
    return _to_jsonable(obj)


def from_dict(cls, data: dict):
    hints = _hints(cls)
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _from_jsonable(hints[f.name], data[f.name])
    return cls(**kwargs)


def to_json(obj: Any, *, indent: Optional[int] = 2) -> str:
    """Deterministic JSON text (sorted keys) for any domain value."""
    return json.dumps(_to_jsonable(obj), indent=indent, sort_keys=True, ensure_ascii=False)
