"""Corpus construction: filtering, label consolidation, LLM-assisted extraction,
quality control and the dev/test/challenge split."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from ..agents import Agents
from ..errors import FactCheckError, HtmlParseError, SchemaViolation
from ..model import VeracityLabel, from_dict, parse_date, to_dict
from .reformat import IMAGE, VIDEO, TaggedArticle, classify_url, reformat_article

logger = logging.getLogger(__name__)

MIN_WORDS = 90
MAX_WORDS = 2000
MIN_IMAGE_SIDE = 200
DEV_TO_TEST = 4.29


class DatasetLabel(str, enum.Enum):
    TRUE = "True"
    FALSE = "False"
    UNPROVEN = "Unproven"
    MIXTURE = "Mixture"
    OUTDATED = "Outdated"
    EXCLUDED = "Excluded"

    @property
    def veracity(self) -> Optional[VeracityLabel]:
        try:
            return VeracityLabel(self.value)
        except ValueError:
            return None


LABEL_TABLE: dict[DatasetLabel, tuple[str, ...]] = {
    DatasetLabel.FALSE: ("FALSE", "MISCAPTION", "MISCAPTIONED", "FAKE", "LEGEND", "SCAM", "MISATTRIBUTED"),
    DatasetLabel.MIXTURE: ("MOSTLY FALSE", "MIXTURE", "MOSTLY TRUE"),
    DatasetLabel.OUTDATED: ("OUTDATED",),
    DatasetLabel.TRUE: ("TRUE", "CORRECT ATTRIBUTION", "LEGIT"),
    DatasetLabel.UNPROVEN: ("UNFOUNDED", "UNPROVEN", "RESEARCH IN PROGRESS"),
}
_RAW_TO_LABEL = {raw: label for label, raws in LABEL_TABLE.items() for raw in raws}
CHALLENGE_LABELS = frozenset({DatasetLabel.MIXTURE, DatasetLabel.OUTDATED})


def map_label(raw: str) -> DatasetLabel:
    """Consolidate a raw rating; unknown ratings (satire, labeled satire, ...) are excluded."""
    key = " ".join(str(raw).upper().split())
    return _RAW_TO_LABEL.get(key, DatasetLabel.EXCLUDED)


# -- size filters -------------------------------------------------------------


@dataclass(frozen=True)
class ImageDims:
    url: str
    width: int
    height: int

    @property
    def too_small(self) -> bool:
        return self.width < MIN_IMAGE_SIDE or self.height < MIN_IMAGE_SIDE


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str = ""
    dropped_images: tuple[str, ...] = ()


def filter_article(article: TaggedArticle, images: Sequence[ImageDims] = ()) -> FilterDecision:
    if article.word_count < MIN_WORDS:
        return FilterDecision(False, "too_short")
    if article.word_count > MAX_WORDS:
        return FilterDecision(False, "too_long")
    dropped = tuple(im.url for im in images if im.too_small)
    return FilterDecision(True, "", dropped)


# -- records ------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruthKeyPoint:
    text: str
    evidence_refs: tuple[int, ...] = ()


@dataclass(frozen=True)
class GroundTruthEvidence:
    description: str
    url: str = ""
    modality: str = "text"


@dataclass(frozen=True)
class DatasetRecord:
    claim_id: str
    claim_text: str
    label: DatasetLabel
    post_text: str = ""
    post_image_url: Optional[str] = None
    domain_category: str = ""
    fact_check_date: Optional[dt.date] = None
    gt_reasoning: str = ""
    gt_key_points: tuple[GroundTruthKeyPoint, ...] = ()
    gt_evidence: tuple[GroundTruthEvidence, ...] = ()
    gt_evidence_count: int = -1

    def __post_init__(self):
        if self.label is DatasetLabel.EXCLUDED:
            raise ValueError("excluded labels never enter the corpus")
        if self.gt_evidence_count == -1:
            object.__setattr__(self, "gt_evidence_count", len(self.gt_evidence))
        if self.gt_evidence_count != len(self.gt_evidence):
            raise ValueError("gt_evidence_count must equal the number of gt_evidence entries")
        for kp in self.gt_key_points:
            if any(not 0 <= i < len(self.gt_evidence) for i in kp.evidence_refs):
                raise ValueError("key point refers to missing evidence")

    def to_json(self) -> str:
        return json.dumps(to_dict(self), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "DatasetRecord":
        return from_dict(cls, json.loads(line))


def read_records(path: str | Path) -> list[DatasetRecord]:
    with open(path, encoding="utf-8") as fh:
        return [DatasetRecord.from_json(line) for line in fh if line.strip()]


def write_records(path: str | Path, records: Iterable[DatasetRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


# -- LLM-assisted extraction ----------------------------------------------------


@dataclass(frozen=True)
class Annotations:
    post_text: str
    post_media: tuple[str, ...]
    reasoning: str
    key_points: tuple[GroundTruthKeyPoint, ...]
    evidence: tuple[GroundTruthEvidence, ...]

    @property
    def post_image(self) -> Optional[str]:
        return next((u for u in self.post_media if classify_url(u) == IMAGE), None)


def _modality(url: str) -> str:
    kind = classify_url(url)
    return {IMAGE: "image", VIDEO: "video"}.get(kind, "text")


def extract_annotations(article: TaggedArticle, agents: Agents) -> Annotations:
    """Post, rationale and per-key-point evidence, in three chained calls.

    Every returned link is checked against the article's own tags.
    """
    links = article.links()
    base = {"headline": article.headline or "(none)", "claim": article.claim or "(none)", "article": article.interleaved_text}
    post = agents.ask("EX-post", base, article_links=links)
    rationale = agents.ask("EX-rationale", base)
    evidence: list[GroundTruthEvidence] = []
    key_points: list[GroundTruthKeyPoint] = []
    for point in rationale.key_points:
        found = agents.ask("EX-evidence", {"key_point": point, "article": article.interleaved_text}, article_links=links)
        refs = []
        for item in found:
            for url in item.links or ("",):
                refs.append(len(evidence))
                evidence.append(GroundTruthEvidence(item.description, url, _modality(url) if url else "text"))
        key_points.append(GroundTruthKeyPoint(point, tuple(refs)))
    return Annotations(
        post_text=post.post_text,
        post_media=post.post_links,
        reasoning=rationale.reasoning_logic,
        key_points=tuple(key_points),
        evidence=tuple(evidence),
    )


# -- quality control ------------------------------------------------------------


@dataclass(frozen=True)
class QCDecision:
    keep: bool
    reasons: tuple[str, ...] = ()
    matched_keywords: tuple[str, ...] = ()


def qc_checks(record: DatasetRecord, image: str, agents: Agents) -> QCDecision:
    """Reject claims that do not need the image, and images stamped with a verdict."""
    reasons = []
    necessity = agents.ask("QC-necessity", {"claim_text": record.claim_text})
    if necessity.image_required in ("no", "uncertain"):
        reasons.append("not_multimodal")
    watermark = agents.ask("QC-watermark", {"image_ref": image}, attachments=[image])
    if watermark.watermarked:
        reasons.append("watermark")
    return QCDecision(not reasons, tuple(reasons), watermark.matched_keywords)


# -- split ------------------------------------------------------------------------


@dataclass(frozen=True)
class Split:
    dev: tuple[DatasetRecord, ...]
    test: tuple[DatasetRecord, ...]
    challenge: tuple[DatasetRecord, ...]


def dev_size(n: int, ratio: float = DEV_TO_TEST) -> int:
    # round half up; Python's round() would send exact halves to even
    return int(math.floor(n / (1.0 + ratio) + 0.5))


def split_dataset(records: Sequence[DatasetRecord], seed: int = 0, ratio: float = DEV_TO_TEST) -> Split:
    challenge = tuple(r for r in records if r.label in CHALLENGE_LABELS)
    main = [r for r in records if r.label not in CHALLENGE_LABELS]
    order = list(range(len(main)))
    random.Random(seed).shuffle(order)
    k = dev_size(len(main), ratio)
    dev_idx = set(order[:k])
    dev = tuple(r for i, r in enumerate(main) if i in dev_idx)
    test = tuple(r for i, r in enumerate(main) if i not in dev_idx)
    return Split(dev, test, challenge)


# -- directory driver -------------------------------------------------------------

_LOOSE_DATE_FORMATS = ("%B %d, %Y", "%b %d, %Y", "%d %B %Y", "%d %b %Y", "%Y/%m/%d", "%m/%d/%Y")


def parse_fact_check_date(value: Any, *, strict: bool = False) -> dt.date:
    if value in (None, ""):
        raise ValueError("missing fact-check date")
    try:
        return parse_date(value)
    except ValueError:
        if strict:
            raise
    text = " ".join(str(value).split())
    for fmt in _LOOSE_DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unrecognised date {value!r}")


@dataclass(frozen=True)
class Rejection:
    source: str
    reason: str
    detail: str = ""


@dataclass
class BuildReport:
    records: list = field(default_factory=list)
    rejections: list = field(default_factory=list)
    dropped_images: dict = field(default_factory=dict)
    split: Optional[Split] = None


def _process(meta_path: Path, agents: Agents, strict_dates: bool) -> tuple[Optional[DatasetRecord], list[Rejection], tuple[str, ...]]:
    name = meta_path.stem
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return None, [Rejection(name, "bad_metadata", str(exc))], ()
    html_path = meta_path.with_suffix(".html")
    if not html_path.exists():
        return None, [Rejection(name, "missing_html")], ()
    try:
        date = parse_fact_check_date(meta.get("date"), strict=strict_dates)
    except ValueError as exc:
        return None, [Rejection(name, "bad_date", str(exc))], ()
    label = map_label(meta.get("label", ""))
    if label is DatasetLabel.EXCLUDED:
        return None, [Rejection(name, "excluded_label", str(meta.get("label", "")))], ()
    try:
        article = reformat_article(
            html_path.read_bytes(),
            article_url=meta.get("url", ""),
            category=meta.get("category", ""),
            headline=meta.get("headline", ""),
            claim=meta.get("claim", ""),
            raw_label=meta.get("label", ""),
        )
    except HtmlParseError as exc:
        return None, [Rejection(name, "html_error", str(exc))], ()
    dims = [ImageDims(url, int(w), int(h)) for url, (w, h) in sorted(meta.get("image_dims", {}).items())]
    decision = filter_article(article, dims)
    if not decision.keep:
        return None, [Rejection(name, decision.reason, f"{article.word_count} words")], ()
    try:
        ann = extract_annotations(article, agents)
    except SchemaViolation as exc:
        return None, [Rejection(name, "extraction_failed", str(exc))], decision.dropped_images
    image = next(
        (u for u in ann.post_media if classify_url(u) == IMAGE and u not in decision.dropped_images),
        None,
    )
    if image is None:
        return None, [Rejection(name, "no_post_image")], decision.dropped_images
    record = DatasetRecord(
        claim_id=str(meta.get("claim_id") or name),
        claim_text=article.claim or article.headline,
        label=label,
        post_text=ann.post_text,
        post_image_url=image,
        domain_category=article.category,
        fact_check_date=date,
        gt_reasoning=ann.reasoning,
        gt_key_points=ann.key_points,
        gt_evidence=ann.evidence,
    )
    if not record.claim_text.strip():
        return None, [Rejection(name, "missing_claim")], decision.dropped_images
    qc = qc_checks(record, image, agents)
    if not qc.keep:
        return None, [Rejection(name, r, ",".join(qc.matched_keywords)) for r in qc.reasons], decision.dropped_images
    return record, [], decision.dropped_images


def build_corpus(
    in_dir: str | Path,
    out_path: str | Path,
    agents: Agents,
    *,
    seed: int = 0,
    strict_dates: bool = False,
    workers: int = 1,
) -> BuildReport:
    """Build the corpus from ``<name>.json`` + ``<name>.html`` pairs in ``in_dir``.

    Writes ``out_path`` (all kept records), ``<stem>.dev/.test/.challenge.jsonl``
    next to it, and ``<stem>.rejections.csv``.
    """
    in_dir, out_path = Path(in_dir), Path(out_path)
    metas = sorted(in_dir.glob("*.json"))
    report = BuildReport()

    def work(p: Path):
        try:
            return _process(p, agents, strict_dates)
        except FactCheckError as exc:
            if not isinstance(exc, SchemaViolation):
                raise
            return None, [Rejection(p.stem, "qc_failed", str(exc))], ()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, metas))
    else:
        results = [work(p) for p in metas]
    for path, (record, rejections, dropped) in zip(metas, results):
        if record is not None:
            report.records.append(record)
        report.rejections.extend(rejections)
        if dropped:
            report.dropped_images[path.stem] = list(dropped)

    report.split = split_dataset(report.records, seed)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_records(out_path, report.records)
    stem = out_path.with_suffix("")
    for part in ("dev", "test", "challenge"):
        write_records(f"{stem}.{part}.jsonl", getattr(report.split, part))
    with open(f"{stem}.rejections.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "reason", "detail"])
        for r in report.rejections:
            writer.writerow([r.source, r.reason, r.detail])
        for source, urls in report.dropped_images.items():
            for url in urls:
                writer.writerow([source, "image_too_small", url])
    return report

