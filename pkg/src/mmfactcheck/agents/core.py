"""The five agents: each one renders a template, calls the chat provider and
validates the reply, re-asking with the violation appended on failure."""

from __future__ import annotations

import datetime as dt
import logging
from typing import Any, Callable, Iterable, Optional, Sequence

from ..errors import QueryExhausted, SchemaViolation
from ..model import (
    EvidenceItem,
    EvidencePool,
    Explanation,
    ImageAnalysisResult,
    Modality,
    MultimodalClaim,
    Plan,
    ReasoningOutput,
    registrable_domain,
)
from ..providers.base import ChatProvider, ChatRequest, ReverseImageMatch, SearchResult, is_url
from ..providers.images import ensure_decodable
from ..providers.replay import CHAT, chat_payload, request_key
from ..schemas import (
    R,
    RELATIONSHIP_TEXT,
    SP,
    EvidenceSummary,
    ImageMatchVerdict,
    MiscaptionVerdict,
    ReliabilityAssessment,
    render_agent_output,
    validate_agent_output,
)
from .templates import load_template

logger = logging.getLogger(__name__)

TEMPORARY = "temporary"
ACCUMULATED = "accumulated"

Listener = Callable[[dict], None]


def _or_none(text: Optional[str]) -> str:
    return text.strip() if text and text.strip() else "(none)"


def format_plan(plan: Plan) -> str:
    lines = []
    for i, s in enumerate(plan.reasoning_steps, 1):
        method = f" ({s.method})" if s.method else ""
        details = f": {s.details}" if s.details else ""
        lines.append(f"{i}. {s.step}{method}{details}")
    if plan.validation_list:
        lines.append("Statements to validate:")
        lines.extend(f"- {v.sentence}" for v in plan.validation_list)
    if plan.search_list:
        lines.append("Information to look up:")
        lines.extend(f"- {s.information_needed}" for s in plan.search_list)
    return "\n".join(lines) or "(no plan steps)"


def format_evidence(items: Iterable[EvidenceItem]) -> str:
    blocks = []
    for e in items:
        meta = [f"modality: {e.modality.value}", f"source: {e.source_domain or e.source_url}"]
        meta.append(f"reliability: {e.reliability.value}")
        if e.publish_date:
            meta.append(f"date: {e.publish_date.isoformat()}")
        blocks.append(f"[{e.evidence_id}] ({'; '.join(meta)})\nURL: {e.source_url}\n{e.content.strip()}")
    return "\n\n".join(blocks) or "(no evidence)"


def format_image_analysis(result: Optional[ImageAnalysisResult]) -> str:
    if result is None:
        return "(no image analysis)"
    lines = []
    for m in result.matches:
        line = f"[{m.evidence_id}] {RELATIONSHIP_TEXT[m.relationship]}: {m.relationship_reasoning}"
        if m.tampering_probability is not None:
            line += f" (tampering probability {m.tampering_probability:g}%)"
        lines.append(line)
    if not result.matches:
        lines.append("Reverse image search found no matches.")
    if result.tampering_score is not None:
        lines.append(f"Tampering score: {result.tampering_score:g}%")
    if result.miscaption_score is not None:
        lines.append(f"Miscaption score: {result.miscaption_score:g}%")
        if result.miscaption_reasoning:
            lines.append(f"Miscaption reasoning: {result.miscaption_reasoning}")
    if result.deepfake_score is not None:
        lines.append(f"Deepfake probability: {result.deepfake_score:g}")
    return "\n".join(lines)


def format_results(results: Sequence[SearchResult]) -> str:
    blocks = []
    for i, r in enumerate(results, 1):
        date = r.publish_date.isoformat() if isinstance(r.publish_date, dt.date) else "unknown"
        blocks.append(f"[{i}] URL: {r.url}\nTitle: {r.title}\nDate: {date}\nSnippet: {r.snippet}")
    return "\n\n".join(blocks)


class Agents:
    """Stateless agent calls over one chat provider.

    ``listener`` receives one event per chat call (template, attempt, fixture
    key, outcome) so the orchestrator can trace provider traffic.
    """

    def __init__(
        self,
        chat: ChatProvider,
        *,
        retries: int = 2,
        temperature: float = 0.0,
        listener: Optional[Listener] = None,
    ):
        if retries < 0:
            raise ValueError("retries must be >= 0")
        self.chat = chat
        self.retries = retries
        self.temperature = temperature
        self.listener = listener

    def with_listener(self, listener: Optional[Listener]) -> "Agents":
        return Agents(self.chat, retries=self.retries, temperature=self.temperature, listener=listener)

    def _emit(self, event: dict) -> None:
        if self.listener is not None:
            self.listener(event)

    def ask(
        self,
        template_id: str,
        bindings: dict[str, Any],
        *,
        attachments: Sequence[str] = (),
        **context: Any,
    ) -> Any:
        """Render, call and validate; re-ask up to ``retries`` times on a schema violation."""
        tpl = load_template(template_id)
        user = tpl.render(**bindings)
        content = user
        last: Optional[SchemaViolation] = None
        for attempt in range(self.retries + 1):
            request = ChatRequest(
                system_prompt=tpl.system_text,
                user_content=content,
                response_schema_id=tpl.schema_id,
                image_attachments=tuple(attachments),
                temperature=self.temperature,
            )
            key = request_key(CHAT, chat_payload(request))
            raw = self.chat.chat(request)
            try:
                value = validate_agent_output(raw, tpl.schema_id, **context)
            except SchemaViolation as exc:
                last = exc
                logger.info("%s attempt %d rejected: %s", template_id, attempt + 1, exc)
                self._emit(
                    {
                        "event": "agent_call",
                        "template": template_id,
                        "attempt": attempt + 1,
                        "key": key,
                        "status": "rejected",
                        "field": exc.field,
                        "reason": exc.reason,
                    }
                )
                content = (
                    f"{user}\n"
                    f"Your previous answer was rejected. Field `{exc.field}`: {exc.reason}.\n"
                    "Return the corrected JSON only."
                )
                continue
            self._emit(
                {"event": "agent_call", "template": template_id, "attempt": attempt + 1, "key": key, "status": "ok"}
            )
            return value
        assert last is not None
        raise last

    # -- strategy planning -------------------------------------------------

    def plan(
        self,
        claim: MultimodalClaim,
        previous_reasoning: Optional[ReasoningOutput] = None,
        *,
        previous_plan: Optional[Plan] = None,
        attempt: int = 0,
    ) -> Plan:
        if attempt == 0 and previous_reasoning is None and previous_plan is None:
            previous = "This is the first planning round."
        else:
            parts = [f"Planning round {attempt + 1}. The previous attempt did not reach a confident verdict."]
            if previous_plan is not None:
                parts.append("Previous plan:\n" + render_agent_output(previous_plan, SP))
            if previous_reasoning is not None:
                parts.append("Previous reasoning:\n" + render_agent_output(previous_reasoning, R))
            parts.append("Plan again, targeting what the previous attempt could not establish.")
            previous = "\n\n".join(parts)
        return self.ask(
            "SP",
            {
                "claim_text": claim.claim_text,
                "post_text": _or_none(claim.post_text),
                "image_note": "present" if claim.post_image else "none",
                "previous_section": previous,
            },
        )

    # -- text retrieval -----------------------------------------------------

    def generate_queries(
        self, items: Sequence[str], claim: MultimodalClaim, prior_queries: Sequence[str] = ()
    ) -> list[str]:
        """At most one query per item, never repeating a prior query (case-insensitive).

        Raises :class:`QueryExhausted` when the model only proposed repeats.
        """
        items = [i for i in items if i and i.strip()]
        if not items:
            return []
        proposed = self.ask(
            "TR-query",
            {
                "information_items": "\n".join(f"{n}. {item}" for n, item in enumerate(items, 1)),
                "claim_text": claim.claim_text,
                "post_text": _or_none(claim.post_text),
                "prior_queries": "\n".join(f"- {q}" for q in prior_queries) or "(none)",
            },
        )
        seen = {q.strip().casefold() for q in prior_queries}
        out = []
        for q in proposed:
            folded = q.casefold()
            if folded in seen:
                continue
            seen.add(folded)
            out.append(q)
        if proposed and not out:
            raise QueryExhausted(f"every proposed query repeats an earlier one: {list(proposed)}")
        return out[: len(items)]

    def filter_and_summarize(self, query: str, results: Sequence[SearchResult]) -> list[EvidenceSummary]:
        if not results:
            return []
        summaries = self.ask(
            "TR-summary",
            {"query": query, "results": format_results(results)},
            urls=[r.url for r in results],
        )
        out, seen = [], set()
        for s in summaries:
            if s.source_url not in seen:
                seen.add(s.source_url)
                out.append(s)
        return out

    def assess_source_reliability(self, url: str) -> ReliabilityAssessment:
        if not is_url(url):
            raise ValueError(f"not a URL: {url!r}")
        return self.ask("TR-reliability", {"url": url, "domain": registrable_domain(url)})

    # -- image retrieval ----------------------------------------------------

    def analyze_image_relationship(self, post_image: str, match: ReverseImageMatch) -> ImageMatchVerdict:
        ensure_decodable(post_image)
        attachments = [post_image]
        if match.image_url:
            ensure_decodable(match.image_url)
            attachments.append(match.image_url)
        return self.ask(
            "IR-match",
            {
                "image_url": _or_none(match.image_url),
                "page_url": _or_none(match.page_url),
                "page_text": _or_none(match.page_text),
            },
            attachments=attachments,
        )

    def detect_miscaption(self, claim: MultimodalClaim, evidence_context: str) -> MiscaptionVerdict:
        if not evidence_context or not evidence_context.strip():
            raise ValueError("evidence_context must be non-empty")
        return self.ask(
            "IR-miscaption",
            {
                "claim_text": claim.claim_text,
                "post_text": _or_none(claim.post_text),
                "evidence_context": evidence_context.strip(),
            },
            attachments=[claim.post_image] if claim.post_image else [],
        )

    # -- reasoning ----------------------------------------------------------

    def reason(
        self,
        claim: MultimodalClaim,
        plan: Plan,
        evidence: Sequence[EvidenceItem],
        image_analysis: Optional[ImageAnalysisResult] = None,
        mode: str = ACCUMULATED,
    ) -> ReasoningOutput:
        if mode not in (TEMPORARY, ACCUMULATED):
            raise ValueError(f"unknown reasoning mode {mode!r}")
        evidence = list(evidence)
        if mode == TEMPORARY and not evidence:
            raise ValueError("temporary reasoning needs at least one evidence item")
        return self.ask(
            "R-T" if mode == TEMPORARY else "R-A",
            {
                "claim_text": claim.claim_text,
                "post_text": _or_none(claim.post_text),
                "plan_steps": format_plan(plan),
                "evidence": format_evidence(evidence),
                "image_analysis": format_image_analysis(image_analysis),
            },
            text_ids=[e.evidence_id for e in evidence if e.modality is Modality.TEXT],
            image_ids=[e.evidence_id for e in evidence if e.modality is Modality.IMAGE],
        )

    # -- explanation --------------------------------------------------------

    def generate_explanation(
        self,
        claim: MultimodalClaim,
        reasoning: ReasoningOutput,
        evidence: EvidencePool | Sequence[EvidenceItem],
        image_analysis: Optional[ImageAnalysisResult] = None,
    ) -> Explanation:
        items = tuple(evidence)
        return self.ask(
            "EG",
            {
                "claim_text": claim.claim_text,
                "post_text": _or_none(claim.post_text),
                "reasoning": render_agent_output(reasoning, R),
                "evidence": format_evidence(items),
                "image_analysis": format_image_analysis(image_analysis),
            },
            attachments=[claim.post_image] if claim.post_image else [],
            evidence=items,
            image_analysis=image_analysis,
        )

