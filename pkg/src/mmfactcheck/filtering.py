"""Leakage filters: fact-checking domains and evidence dated after the claim's fact-check."""

from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .model import EvidenceItem, MultimodalClaim, SourceReliability

BLOCKED_DOMAIN = "blocked_domain"
AFTER_CUTOFF = "after_cutoff"
FACTCHECK_RELIABILITY = "factcheck_reliability"


@dataclass(frozen=True)
class DomainBlocklist:
    substrings: tuple[str, ...]

    def __post_init__(self):
        cleaned = tuple(dict.fromkeys(s.strip().lower() for s in self.substrings))
        if any(not s for s in cleaned):
            raise ValueError("blocklist entries must be non-empty")
        object.__setattr__(self, "substrings", cleaned)

    @classmethod
    def parse(cls, text: str) -> "DomainBlocklist":
        entries = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                entries.append(line)
        return cls(tuple(entries))

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "DomainBlocklist":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    @classmethod
    def default(cls) -> "DomainBlocklist":
        return cls.parse(resources.files("mmfactcheck.data").joinpath("blocklist.txt").read_text(encoding="utf-8"))

    def match(self, url: str) -> Optional[str]:
        lowered = url.lower()
        for s in self.substrings:
            if s in lowered:
                return s
        return None


def is_blocked_domain(url: str, blocklist: DomainBlocklist) -> bool:
    if not url:
        raise ValueError("url must be non-empty")
    return blocklist.match(url) is not None


def is_after_cutoff(evidence_date: Optional[dt.date], cutoff: Optional[dt.date]) -> bool:
    """Strictly later than the cutoff; unknown dates are never treated as late."""
    if evidence_date is None or cutoff is None:
        return False
    return evidence_date > cutoff


@dataclass(frozen=True)
class Rejection:
    item: EvidenceItem
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class FilterResult:
    admitted: tuple[EvidenceItem, ...]
    rejected: tuple[Rejection, ...]


def rejection_reason(
    url: str,
    publish_date: Optional[dt.date],
    claim: MultimodalClaim,
    blocklist: DomainBlocklist,
    *,
    reliability: Optional[SourceReliability] = None,
    strict_dates: bool = False,
) -> Optional[tuple[str, str]]:
    """First applicable (reason, detail) pair, or ``None`` when admissible."""
    hit = blocklist.match(url)
    if hit is not None:
        return BLOCKED_DOMAIN, hit
    if is_after_cutoff(publish_date, claim.claim_date):
        return AFTER_CUTOFF, f"{publish_date} > {claim.claim_date}"
    if strict_dates and claim.claim_date is not None and publish_date is None:
        return AFTER_CUTOFF, "undated (strict mode)"
    if reliability is SourceReliability.FACTCHECK:
        return FACTCHECK_RELIABILITY, ""
    return None


def filter_evidence(
    candidates: Sequence[EvidenceItem],
    claim: MultimodalClaim,
    blocklist: DomainBlocklist,
    *,
    strict_dates: bool = False,
) -> FilterResult:
    """Partition ``candidates`` into admitted and rejected, preserving order.

    With ``strict_dates`` an undated item counts as after the cutoff whenever
    the claim has one.
    """
    admitted: list[EvidenceItem] = []
    rejected: list[Rejection] = []
    for item in candidates:
        why = rejection_reason(
            item.source_url,
            item.publish_date,
            claim,
            blocklist,
            reliability=item.reliability,
            strict_dates=strict_dates,
        )
        if why is None:
            admitted.append(item)
        else:
            rejected.append(Rejection(item, *why))
    return FilterResult(tuple(admitted), tuple(rejected))

