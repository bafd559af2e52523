"""Strict JSON gate for agent outputs.

Each agent answers in a fixed JSON layout whose field names mirror the prompt
it was given (``my_understanding_of_claim``, ``validation_result``,
``confidence_level`` ...). :func:`validate_agent_output` parses raw model text
against one of those layouts and returns a typed value, raising
:class:`SchemaViolation` with a dotted field path on the first problem.
:func:`render_agent_output` is its inverse and is used by the synthetic
providers and the tests.

Unknown fields are ignored. Percentages may arrive as strings such as
``"85%"``; they are normalised to floats.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional

from .errors import CitationOutOfPool, LinkNotInArticle, SchemaViolation
from .model import (
    EVIDENCE_ID_RE,
    BinaryLabel,
    DirectFactCheck,
    EvidenceItem,
    Explanation,
    ImageAnalysisResult,
    ImageRelationship,
    KeyPoint,
    Plan,
    PlanStep,
    ReasoningOutput,
    ReasoningStep,
    SearchItem,
    SourceReliability,
    ValidationItem,
    VeracityLabel,
    collapse_to_binary,
)

SP = "SP"
TR_QUERY = "TR-query"
TR_RELIABILITY = "TR-reliability"
TR_SUMMARY = "TR-summary"
R = "R"
IR_MATCH = "IR-match"
IR_MISCAPTION = "IR-miscaption"
EG = "EG"
QC_WATERMARK = "QC-watermark"
QC_NECESSITY = "QC-necessity"
EX_POST = "EX-post"
EX_RATIONALE = "EX-rationale"
EX_EVIDENCE = "EX-evidence"

#: The seven layouts that the agent prompts define.
AGENT_SCHEMAS = (SP, TR_QUERY, TR_RELIABILITY, R, IR_MATCH, IR_MISCAPTION, EG)
ALL_SCHEMAS = AGENT_SCHEMAS + (
    TR_SUMMARY,
    QC_WATERMARK,
    QC_NECESSITY,
    EX_POST,
    EX_RATIONALE,
    EX_EVIDENCE,
)

MAX_PLAN_ITEMS = 3


# ---------------------------------------------------------------------------
# Typed results for the non-core layouts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReliabilityAssessment:
    reliability: SourceReliability
    reasoning: str
    usage: str = ""
    source_identification: str = ""


@dataclass(frozen=True)
class EvidenceSummary:
    source_url: str
    summary: str


@dataclass(frozen=True)
class ImageMatchVerdict:
    relationship: ImageRelationship
    relationship_reasoning: str
    tampering_probability: Optional[float] = None
    tampering_reasoning: str = ""
    confidence: str = ""


MISCAPTION_BANDS = (
    (0, 20, "accurately supports"),
    (30, 50, "generally aligned but missing context"),
    (60, 80, "misleading impression"),
    (90, 100, "unrelated/strongly contradicts"),
)


def miscaption_band(rate: float) -> str:
    """Scoring-guide band for a miscaption rate.

    The guide leaves gaps between bands (21-29, 51-59, 81-89); a rate in a
    gap is assigned to the nearer band edge, ties going to the higher band.
    """
    best = None
    for lo, hi, name in MISCAPTION_BANDS:
        if lo <= rate <= hi:
            return name
        dist = lo - rate if rate < lo else rate - hi
        if best is None or dist <= best[0]:
            best = (dist, name)
    return best[1]


@dataclass(frozen=True)
class MiscaptionVerdict:
    claim_paraphrase: str
    miscaption_rate: float
    reasoning: str

    @property
    def band(self) -> str:
        return miscaption_band(self.miscaption_rate)


@dataclass(frozen=True)
class WatermarkVerdict:
    watermarked: bool
    matched_keywords: tuple[str, ...] = ()
    reason: str = ""


@dataclass(frozen=True)
class NecessityVerdict:
    image_required: str  # "yes" | "no" | "uncertain"
    reason: str = ""


@dataclass(frozen=True)
class PostExtraction:
    post_text: str
    post_links: tuple[str, ...] = ()


@dataclass(frozen=True)
class RationaleExtraction:
    reasoning_logic: str
    key_points: tuple[str, ...]


@dataclass(frozen=True)
class ExtractedEvidence:
    description: str
    links: tuple[str, ...]


# ---------------------------------------------------------------------------
# Field helpers
# ---------------------------------------------------------------------------


def _join(path: str, key: Any) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def parse_json_object(raw: str) -> dict:
    text = raw.strip()
    fence = re.match(r"^```[a-zA-Z]*\s*\n?(.*?)\n?```$", text, re.S)
    if fence:
        text = fence.group(1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("$", f"not valid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise SchemaViolation("$", "top-level value must be a JSON object")
    return doc


def _obj(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(path or "$", "expected an object")
    return value


def _req(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise SchemaViolation(_join(path, key), "missing required field")
    return doc[key]


def _str(value: Any, path: str, *, nonempty: bool = False) -> str:
    if value is None:
        value = ""
    if not isinstance(value, str):
        raise SchemaViolation(path, f"expected a string, got {type(value).__name__}")
    if nonempty and not value.strip():
        raise SchemaViolation(path, "must be non-empty")
    return value


def _list(value: Any, path: str, *, max_len: Optional[int] = None) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise SchemaViolation(path, "expected a list")
    if max_len is not None and len(value) > max_len:
        raise SchemaViolation(path, f"at most {max_len} entries allowed, got {len(value)}")
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool):
        raise SchemaViolation(path, "expected a number")
    if isinstance(value, str):
        text = value.strip()
        if text.endswith("%"):
            text = text[:-1].strip()
        try:
            value = float(text)
        except ValueError:
            pass
    if isinstance(value, (int, float)) and math.isfinite(value):
        return float(value)
    raise SchemaViolation(path, f"expected a finite number, got {value!r}")


def _percent(value: Any, path: str) -> float:
    v = _number(value, path)
    if not 0 <= v <= 100:
        raise SchemaViolation(path, f"{v:g} outside [0, 100]")
    return v


def _confidence(value: Any, path: str) -> int:
    if isinstance(value, str) and not value.strip():
        raise SchemaViolation(path, "must be non-empty")
    v = _number(value, path)
    if v != int(v) or not 1 <= v <= 5:
        raise SchemaViolation(path, f"{value!r} is not an integer in [1, 5]")
    return int(v)


def _is_blank(value: Any) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


def _squash(text: str) -> str:
    return re.sub(r"[^a-z0-9]", "", text.lower())


def _enum(value: Any, path: str, vocab: dict[str, Any]) -> Any:
    if not isinstance(value, str) or _squash(value) not in vocab:
        raise SchemaViolation(path, f"{value!r} not in vocabulary {sorted(vocab)}")
    return vocab[_squash(value)]


_VERACITY = {"true": VeracityLabel.TRUE, "false": VeracityLabel.FALSE, "unproven": VeracityLabel.UNPROVEN}
_BINARY = {
    "true": BinaryLabel.TRUE,
    "false": BinaryLabel.NOT_TRUE,
    "nottrue": BinaryLabel.NOT_TRUE,
}
_RELIABILITY = {r.value: r for r in SourceReliability}
_RELATIONSHIP = {
    "potentiallyfromsamesource": ImageRelationship.SAME_SOURCE,
    "potentiallyfromthesamesource": ImageRelationship.SAME_SOURCE,
    "sameeventdifferentcontent": ImageRelationship.SAME_EVENT,
    "noclose": ImageRelationship.NO_RELATION,
    "nocloserelationship": ImageRelationship.NO_RELATION,
}
_NECESSITY = {"yes": "yes", "no": "no", "uncertain": "uncertain", "unsure": "uncertain"}

RELATIONSHIP_TEXT = {
    ImageRelationship.SAME_SOURCE: "Potentially From Same Source",
    ImageRelationship.SAME_EVENT: "Same Event, Different Content",
    ImageRelationship.NO_RELATION: "No Close Relationship",
}


def _ids(value: Any, path: str, allowed: Optional[Iterable[str]]) -> tuple[str, ...]:
    items = _list(value, path)
    out = []
    allowed_set = None if allowed is None else set(allowed)
    for i, v in enumerate(items):
        if isinstance(v, int) and not isinstance(v, bool):
            v = str(v)
        v = _str(v, _join(path, i), nonempty=True).strip()
        if allowed_set is not None and v not in allowed_set:
            raise CitationOutOfPool(_join(path, i), f"evidence id {v!r} not in the supplied pool")
        out.append(v)
    return tuple(out)


# ---------------------------------------------------------------------------
# Per-layout parsers
# ---------------------------------------------------------------------------


def _parse_sp(doc: dict, **_) -> Plan:
    steps = []
    for i, s in enumerate(_list(_req(doc, "reasoning_steps", ""), "reasoning_steps")):
        p = _join("reasoning_steps", i)
        s = _obj(s, p)
        steps.append(
            PlanStep(
                step=_str(_req(s, "step", p), _join(p, "step"), nonempty=True),
                method=_str(s.get("method"), _join(p, "method")),
                details=_str(s.get("details"), _join(p, "details")),
            )
        )
    vlist = []
    raw_v = _list(_req(doc, "validation_list", ""), "validation_list", max_len=MAX_PLAN_ITEMS)
    for i, v in enumerate(raw_v):
        p = _join("validation_list", i)
        v = _obj(v, p)
        vlist.append(
            ValidationItem(
                sentence=_str(_req(v, "sentence", p), _join(p, "sentence"), nonempty=True),
                explanation=_str(v.get("explanation"), _join(p, "explanation")),
            )
        )
    slist = []
    raw_s = _list(_req(doc, "search_list", ""), "search_list", max_len=MAX_PLAN_ITEMS)
    for i, s in enumerate(raw_s):
        p = _join("search_list", i)
        s = _obj(s, p)
        slist.append(
            SearchItem(
                _str(_req(s, "information_needed", p), _join(p, "information_needed"), nonempty=True)
            )
        )
    sentences = {v.sentence.strip() for v in vlist}
    for i, s in enumerate(slist):
        if s.information_needed.strip() in sentences:
            raise SchemaViolation(
                _join(_join("search_list", i), "information_needed"),
                "duplicates a validation_list sentence",
            )
    return Plan(tuple(steps), tuple(vlist), tuple(slist))


def _parse_tr_query(doc: dict, **_) -> tuple[str, ...]:
    queries = _list(_req(doc, "queries", ""), "queries")
    return tuple(_str(q, _join("queries", i), nonempty=True).strip() for i, q in enumerate(queries))


def _parse_tr_reliability(doc: dict, **_) -> ReliabilityAssessment:
    return ReliabilityAssessment(
        reliability=_enum(_req(doc, "type", ""), "type", _RELIABILITY),
        reasoning=_str(_req(doc, "reasoning", ""), "reasoning", nonempty=True),
        usage=_str(doc.get("fact_checker_usage"), "fact_checker_usage"),
        source_identification=_str(doc.get("source_identification"), "source_identification"),
    )


def _parse_tr_summary(doc: dict, urls: Optional[Iterable[str]] = None, **_) -> tuple[EvidenceSummary, ...]:
    allowed = None if urls is None else set(urls)
    out = []
    for i, s in enumerate(_list(_req(doc, "summaries", ""), "summaries")):
        p = _join("summaries", i)
        s = _obj(s, p)
        url = _str(_req(s, "source_url", p), _join(p, "source_url"), nonempty=True).strip()
        if allowed is not None and url not in allowed:
            raise SchemaViolation(_join(p, "source_url"), f"{url!r} is not one of the search results")
        out.append(EvidenceSummary(url, _str(_req(s, "summary", p), _join(p, "summary"), nonempty=True)))
    return tuple(out)


def _parse_r(
    doc: dict,
    text_ids: Optional[Iterable[str]] = None,
    image_ids: Optional[Iterable[str]] = None,
    **_,
) -> ReasoningOutput:
    text_ids = None if text_ids is None else list(text_ids)
    image_ids = None if image_ids is None else list(image_ids)
    paraphrase = _str(_req(doc, "my_understanding_of_claim", ""), "my_understanding_of_claim", nonempty=True)
    vr = _obj(_req(doc, "validation_result", ""), "validation_result")
    steps = []
    sp = "validation_result.reasoning_steps"
    for i, s in enumerate(_list(_req(vr, "reasoning_steps", "validation_result"), sp)):
        p = _join(sp, i)
        s = _obj(s, p)
        steps.append(
            ReasoningStep(
                step_name=_str(_req(s, "step_name", p), _join(p, "step_name"), nonempty=True),
                description=_str(s.get("description"), _join(p, "description")),
                analysis_result=_str(s.get("analysis_result"), _join(p, "analysis_result")),
                relevant_evidence_summary=_str(
                    s.get("relevant_evidence_summary"), _join(p, "relevant_evidence_summary")
                ),
                relevant_text_evidence_ids=_ids(
                    s.get("relevant_text_evidence_list"), _join(p, "relevant_text_evidence_list"), text_ids
                ),
                relevant_image_evidence_ids=_ids(
                    s.get("relevant_image_evidence_list"), _join(p, "relevant_image_evidence_list"), image_ids
                ),
                knowledge_evidence=tuple(
                    _list(s.get("evidence_based_on_my_knowledge"), _join(p, "evidence_based_on_my_knowledge"))
                ),
            )
        )
    dp = "validation_result.direct_fact_check_evidence"
    d = _obj(vr.get("direct_fact_check_evidence") or {}, dp)
    direct = DirectFactCheck(
        analysis_result=_str(d.get("analysis_result"), _join(dp, "analysis_result")),
        relevant_evidence_summary=_str(d.get("relevant_evidence_summary"), _join(dp, "relevant_evidence_summary")),
        relevant_text_evidence_ids=_ids(
            d.get("relevant_text_evidence_list"), _join(dp, "relevant_text_evidence_list"), text_ids
        ),
    )
    label = _enum(
        _req(vr, "3-class_authenticity_label", "validation_result"),
        "validation_result.3-class_authenticity_label",
        _VERACITY,
    )
    confidence = _confidence(
        _req(vr, "final_sufficiency_confidence", "validation_result"),
        "validation_result.final_sufficiency_confidence",
    )
    return ReasoningOutput(
        claim_paraphrase=paraphrase,
        label=label,
        confidence=confidence,
        steps=tuple(steps),
        direct_fact_check=direct,
    )


def _parse_ir_match(doc: dict, **_) -> ImageMatchVerdict:
    rel = _enum(_req(doc, "relationship", ""), "relationship", _RELATIONSHIP)
    reasoning = _str(_req(doc, "relationship_reasoning", ""), "relationship_reasoning", nonempty=True)
    prob_raw = doc.get("tampering_probability")
    t_reason = doc.get("tampering_reasoning")
    if rel is ImageRelationship.NO_RELATION:
        if not _is_blank(prob_raw):
            raise SchemaViolation("tampering_probability", "must be empty when relationship is No Close Relationship")
        if not _is_blank(t_reason):
            raise SchemaViolation("tampering_reasoning", "must be empty when relationship is No Close Relationship")
        prob = None
        t_reason = ""
    else:
        if _is_blank(prob_raw):
            raise SchemaViolation("tampering_probability", "required when images are related")
        prob = _percent(prob_raw, "tampering_probability")
        t_reason = _str(t_reason, "tampering_reasoning")
    conf = doc.get("confidence")
    return ImageMatchVerdict(rel, reasoning, prob, t_reason, "" if conf is None else str(conf))


def _parse_ir_miscaption(doc: dict, **_) -> MiscaptionVerdict:
    return MiscaptionVerdict(
        claim_paraphrase=_str(_req(doc, "my_understanding_of_claim", ""), "my_understanding_of_claim", nonempty=True),
        miscaption_rate=_percent(_req(doc, "Miscaption Rate", ""), "Miscaption Rate"),
        reasoning=_str(_req(doc, "Reasoning", ""), "Reasoning", nonempty=True),
    )


_CITE_GROUP = re.compile(r"\s*\[([^\[\]]*)\]")
_NUMBERING = re.compile(r"^\s*\d+[.)]\s+")


def parse_key_point(value: Any, path: str) -> KeyPoint:
    """Key points are strings with bracketed citations, e.g. ``"1. X [1-2, img-1]"``.

    An object form ``{"point": ..., "evidence_ids": [...]}`` is accepted too.
    """
    if isinstance(value, dict):
        text = _str(value.get("point", value.get("text")), _join(path, "point"), nonempty=True)
        ids = _ids(value.get("evidence_ids", value.get("cited_evidence_ids")), _join(path, "evidence_ids"), None)
        return KeyPoint(" ".join(text.split()), ids)
    text = _str(value, path, nonempty=True)
    ids: list[str] = []

    def _strip(m: re.Match) -> str:
        tokens = [t.strip().strip("'\"") for t in m.group(1).split(",")]
        if tokens and all(EVIDENCE_ID_RE.match(t) for t in tokens):
            ids.extend(tokens)
            return ""
        return m.group(0)

    body = _CITE_GROUP.sub(_strip, text)
    body = _NUMBERING.sub("", body)
    body = " ".join(body.split())
    if not body:
        raise SchemaViolation(path, "key point has no text")
    return KeyPoint(body, tuple(dict.fromkeys(ids)))


def render_key_point(kp: KeyPoint, index: int) -> str:
    cites = f" [{', '.join(kp.cited_evidence_ids)}]" if kp.cited_evidence_ids else ""
    return f"{index}. {kp.text}{cites}"


def _parse_eg(
    doc: dict,
    evidence: Optional[Iterable[EvidenceItem]] = None,
    image_analysis: Optional[ImageAnalysisResult] = None,
    **_,
) -> Explanation:
    paraphrase = _str(_req(doc, "my_understanding_of_claim", ""), "my_understanding_of_claim", nonempty=True)
    vr = _obj(_req(doc, "validation_result", ""), "validation_result")
    binary = _enum(
        _req(vr, "2-class_authenticity_label", "validation_result"),
        "validation_result.2-class_authenticity_label",
        _BINARY,
    )
    label = _enum(
        _req(vr, "3-class_authenticity_label", "validation_result"),
        "validation_result.3-class_authenticity_label",
        _VERACITY,
    )
    if label is not VeracityLabel.UNPROVEN and binary is not collapse_to_binary(label):
        raise SchemaViolation(
            "validation_result.2-class_authenticity_label",
            f"{binary.value} is inconsistent with 3-class label {label.value}",
        )
    logic = _str(_req(vr, "reasoning_logic", "validation_result"), "validation_result.reasoning_logic", nonempty=True)
    kpath = "validation_result.key_points"
    key_points = tuple(
        parse_key_point(v, _join(kpath, i)) for i, v in enumerate(_list(_req(vr, "key_points", "validation_result"), kpath))
    )
    if label is not VeracityLabel.UNPROVEN and not key_points:
        raise SchemaViolation(kpath, "must be non-empty unless the label is UNPROVEN")
    confidence = _confidence(_req(doc, "confidence_level", ""), "confidence_level")
    if evidence is not None:
        evidence = tuple(evidence)
        known = {e.evidence_id for e in evidence}
        for i, kp in enumerate(key_points):
            for cid in kp.cited_evidence_ids:
                if cid not in known:
                    raise CitationOutOfPool(_join(kpath, i), f"cites evidence id {cid!r} not in the evidence list")
    return Explanation(
        claim_paraphrase=paraphrase,
        binary_label=binary,
        label=label,
        reasoning_logic=logic,
        confidence=confidence,
        key_points=key_points,
        evidence=evidence or (),
        image_analysis=image_analysis,
    )


def _parse_qc_watermark(doc: dict, **_) -> WatermarkVerdict:
    wm = _req(doc, "watermarked", "")
    if isinstance(wm, str) and wm.strip().lower() in ("true", "false"):
        wm = wm.strip().lower() == "true"
    if not isinstance(wm, bool):
        raise SchemaViolation("watermarked", f"expected true/false, got {wm!r}")
    kws = tuple(
        _str(k, _join("matched_keywords", i), nonempty=True)
        for i, k in enumerate(_list(doc.get("matched_keywords"), "matched_keywords"))
    )
    return WatermarkVerdict(wm, kws, _str(doc.get("reason"), "reason"))


def _parse_qc_necessity(doc: dict, **_) -> NecessityVerdict:
    return NecessityVerdict(
        _enum(_req(doc, "image_required", ""), "image_required", _NECESSITY),
        _str(doc.get("reason"), "reason"),
    )


def _links(value: Any, path: str, article_links: Optional[Iterable[str]]) -> tuple[str, ...]:
    allowed = None if article_links is None else set(article_links)
    out = []
    for i, link in enumerate(_list(value, path)):
        link = _str(link, _join(path, i), nonempty=True).strip()
        if allowed is not None and link not in allowed:
            raise LinkNotInArticle(_join(path, i), f"{link!r} does not occur in the article")
        out.append(link)
    return tuple(out)


def _parse_ex_post(doc: dict, article_links: Optional[Iterable[str]] = None, **_) -> PostExtraction:
    return PostExtraction(
        post_text=_str(_req(doc, "post_text", ""), "post_text"),
        post_links=_links(doc.get("post_links"), "post_links", article_links),
    )


def _parse_ex_rationale(doc: dict, **_) -> RationaleExtraction:
    kps = _list(_req(doc, "key_points", ""), "key_points")
    if not kps:
        raise SchemaViolation("key_points", "must be non-empty")
    return RationaleExtraction(
        reasoning_logic=_str(_req(doc, "reasoning_logic", ""), "reasoning_logic", nonempty=True),
        key_points=tuple(_str(k, _join("key_points", i), nonempty=True) for i, k in enumerate(kps)),
    )


def _parse_ex_evidence(doc: dict, article_links: Optional[Iterable[str]] = None, **_) -> tuple[ExtractedEvidence, ...]:
    out = []
    for i, e in enumerate(_list(_req(doc, "evidence", ""), "evidence")):
        p = _join("evidence", i)
        e = _obj(e, p)
        out.append(
            ExtractedEvidence(
                description=_str(_req(e, "description", p), _join(p, "description"), nonempty=True),
                links=_links(e.get("links"), _join(p, "links"), article_links),
            )
        )
    return tuple(out)


_PARSERS: dict[str, Callable[..., Any]] = {
    SP: _parse_sp,
    TR_QUERY: _parse_tr_query,
    TR_RELIABILITY: _parse_tr_reliability,
    TR_SUMMARY: _parse_tr_summary,
    R: _parse_r,
    IR_MATCH: _parse_ir_match,
    IR_MISCAPTION: _parse_ir_miscaption,
    EG: _parse_eg,
    QC_WATERMARK: _parse_qc_watermark,
    QC_NECESSITY: _parse_qc_necessity,
    EX_POST: _parse_ex_post,
    EX_RATIONALE: _parse_ex_rationale,
    EX_EVIDENCE: _parse_ex_evidence,
}


def validate_agent_output(raw: str, schema_id: str, **context: Any) -> Any:
    """Parse and range-check ``raw`` model text against layout ``schema_id``.

    Optional ``context`` enables containment checks: ``text_ids``/``image_ids``
    for ``R``, ``evidence``/``image_analysis`` for ``EG``, ``urls`` for
    ``TR-summary`` and ``article_links`` for the extraction layouts.
    """
    try:
        parser = _PARSERS[schema_id]
    except KeyError:
        raise ValueError(f"unknown schema id {schema_id!r}") from None
    doc = parse_json_object(raw)
    try:
        return parser(doc, **context)
    except (ValueError, TypeError) as exc:
        # Invariant failures raised while constructing the typed value.
        if isinstance(exc, SchemaViolation):
            raise
        raise SchemaViolation("$", str(exc)) from None


# ---------------------------------------------------------------------------
# Renderers (typed value -> canonical layout)
# ---------------------------------------------------------------------------


def _render_doc(schema_id: str, value: Any) -> dict:
    if schema_id == SP:
        return {
            "reasoning_steps": [{"step": s.step, "method": s.method, "details": s.details} for s in value.reasoning_steps],
            "validation_list": [{"sentence": v.sentence, "explanation": v.explanation} for v in value.validation_list],
            "search_list": [{"information_needed": s.information_needed} for s in value.search_list],
        }
    if schema_id == TR_QUERY:
        return {"queries": list(value)}
    if schema_id == TR_RELIABILITY:
        return {
            "source_identification": value.source_identification,
            "type": value.reliability.value,
            "reasoning": value.reasoning,
            "fact_checker_usage": value.usage,
        }
    if schema_id == TR_SUMMARY:
        return {"summaries": [{"source_url": s.source_url, "summary": s.summary} for s in value]}
    if schema_id == R:
        return {
            "my_understanding_of_claim": value.claim_paraphrase,
            "validation_result": {
                "reasoning_steps": [
                    {
                        "step_name": s.step_name,
                        "description": s.description,
                        "analysis_result": s.analysis_result,
                        "relevant_evidence_summary": s.relevant_evidence_summary,
                        "relevant_text_evidence_list": list(s.relevant_text_evidence_ids),
                        "relevant_image_evidence_list": list(s.relevant_image_evidence_ids),
                        "evidence_based_on_my_knowledge": list(s.knowledge_evidence),
                    }
                    for s in value.steps
                ],
                "direct_fact_check_evidence": {
                    "analysis_result": value.direct_fact_check.analysis_result,
                    "relevant_evidence_summary": value.direct_fact_check.relevant_evidence_summary,
                    "relevant_text_evidence_list": list(value.direct_fact_check.relevant_text_evidence_ids),
                },
                "3-class_authenticity_label": value.label.value.upper(),
                "final_sufficiency_confidence": str(value.confidence),
            },
        }
    if schema_id == IR_MATCH:
        related = value.relationship.is_related
        return {
            "relationship": RELATIONSHIP_TEXT[value.relationship],
            "relationship_reasoning": value.relationship_reasoning,
            "tampering_probability": f"{value.tampering_probability:g}%" if related else "",
            "tampering_reasoning": value.tampering_reasoning if related else "",
            "confidence": value.confidence,
        }
    if schema_id == IR_MISCAPTION:
        return {
            "my_understanding_of_claim": value.claim_paraphrase,
            "Miscaption Rate": f"{value.miscaption_rate:g}%",
            "Reasoning": value.reasoning,
        }
    if schema_id == EG:
        return {
            "my_understanding_of_claim": value.claim_paraphrase,
            "validation_result": {
                "2-class_authenticity_label": "TRUE" if value.binary_label is BinaryLabel.TRUE else "FALSE",
                "3-class_authenticity_label": value.label.value.upper(),
                "reasoning_logic": value.reasoning_logic,
                "key_points": [render_key_point(kp, i + 1) for i, kp in enumerate(value.key_points)],
            },
            "confidence_level": str(value.confidence),
        }
    if schema_id == QC_WATERMARK:
        return {"watermarked": value.watermarked, "matched_keywords": list(value.matched_keywords), "reason": value.reason}
    if schema_id == QC_NECESSITY:
        return {"image_required": value.image_required, "reason": value.reason}
    if schema_id == EX_POST:
        return {"post_text": value.post_text, "post_links": list(value.post_links)}
    if schema_id == EX_RATIONALE:
        return {"reasoning_logic": value.reasoning_logic, "key_points": list(value.key_points)}
    if schema_id == EX_EVIDENCE:
        return {"evidence": [{"description": e.description, "links": list(e.links)} for e in value]}
    raise ValueError(f"unknown schema id {schema_id!r}")


def render_agent_output(value: Any, schema_id: str) -> str:
    """Serialize a typed value into the JSON layout an agent is asked to produce."""
    return json.dumps(_render_doc(schema_id, value), indent=2, ensure_ascii=False)
