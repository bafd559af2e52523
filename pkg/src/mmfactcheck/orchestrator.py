"""Per-claim workflow: plan, retrieve, select, reason, replan, explain.

One claim runs on a single logical task. The image branch may run on a
worker thread, but it records into its own sub-trace and is joined at a
fixed point (before the first accumulated-reasoning call, or before the
explanation if none happens) so that traces stay deterministic.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from .agents import ACCUMULATED, TEMPORARY, Agents
from .errors import (
    BudgetExceeded,
    FactCheckError,
    ProviderError,
    QueryExhausted,
    ReplayMiss,
    SchemaViolation,
    StoreIOError,
)
from .filtering import DomainBlocklist, filter_evidence, rejection_reason
from .model import (
    EvidenceItem,
    EvidencePool,
    Explanation,
    ImageAnalysisResult,
    ImageMatchAnalysis,
    Modality,
    MultimodalClaim,
    Plan,
    ReasoningOutput,
    SourceReliability,
    VeracityLabel,
    registrable_domain,
)
from .providers.base import ReverseImageMatch
from .providers.images import ensure_decodable
from .providers.replay import SEARCH, BudgetedChat, CallBudget, request_key, search_payload
from .providers.suite import ProviderSuite

logger = logging.getLogger(__name__)

IMAGE_ORIGIN = "reverse-image-search"


@dataclass(frozen=True)
class WorkflowConfig:
    evidence_batch_threshold: int = 3
    confidence_threshold: int = 4
    max_reasoning_steps: int = 12
    max_replans: int = 2
    max_validation_items: int = 3
    max_search_items: int = 3
    max_results: int = 10
    # "ge": confidence >= threshold ends the run; "gt": strictly greater.
    confidence_comparison: str = "ge"
    # Count temporary-reasoning calls toward the step cap as well.
    count_temporary_steps: bool = False
    strict_dates: bool = False
    max_chat_calls: int = 60
    agent_retries: int = 2

    def __post_init__(self):
        for name in (
            "evidence_batch_threshold",
            "max_reasoning_steps",
            "max_validation_items",
            "max_search_items",
            "max_results",
            "max_chat_calls",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_replans < 0 or self.agent_retries < 0:
            raise ValueError("max_replans and agent_retries must be >= 0")
        if not 1 <= self.confidence_threshold <= 5:
            raise ValueError("confidence_threshold must lie in [1, 5]")
        if self.confidence_comparison not in ("ge", "gt"):
            raise ValueError("confidence_comparison must be 'ge' or 'gt'")
        if self.max_validation_items > 3 or self.max_search_items > 3:
            raise ValueError("plans hold at most 3 validation and 3 search items")


@dataclass(frozen=True)
class PlanItem:
    kind: str  # "validation" | "search"
    text: str


@dataclass
class WorkflowState:
    current_plan: Optional[Plan] = None
    pending_items: deque = field(default_factory=deque)
    reliable_pool: EvidencePool = field(default_factory=lambda: EvidencePool("reliable"))
    useful_pool: EvidencePool = field(default_factory=lambda: EvidencePool("useful"))
    consumed: set = field(default_factory=set)
    reasoning_history: list = field(default_factory=list)
    temporary_history: list = field(default_factory=list)
    step_count: int = 0
    replan_count: int = 0
    retrieval_round: int = 0
    prior_queries: list = field(default_factory=list)
    reliability_cache: dict = field(default_factory=dict)
    image_result: Optional[ImageAnalysisResult] = None
    image_evidence: tuple = ()
    image_joined: bool = False

    def unconsumed(self) -> list[EvidenceItem]:
        return [e for e in self.reliable_pool if e.evidence_id not in self.consumed]

    def latest(self) -> Optional[ReasoningOutput]:
        return self.reasoning_history[-1] if self.reasoning_history else None


class WorkflowTrace:
    """Ordered event log; serialized as JSON lines with sorted keys."""

    def __init__(self):
        self.events: list[dict] = []

    def emit(self, event: str, **fields: Any) -> None:
        self.events.append({"seq": len(self.events), "event": event, **fields})

    def extend(self, other: "WorkflowTrace") -> None:
        for e in other.events:
            self.emit(e["event"], **{k: v for k, v in e.items() if k not in ("seq", "event")})

    def of(self, event: str) -> list[dict]:
        return [e for e in self.events if e["event"] == event]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, ensure_ascii=False) + "\n" for e in self.events)


@dataclass(frozen=True)
class ImageBranchOutput:
    analysis: ImageAnalysisResult
    evidence: tuple[EvidenceItem, ...]


@dataclass(frozen=True)
class RunResult:
    explanation: Explanation
    trace: WorkflowTrace
    state: WorkflowState


def is_confident(latest: ReasoningOutput, config: WorkflowConfig) -> bool:
    if latest.label is VeracityLabel.UNPROVEN:
        return False
    if config.confidence_comparison == "gt":
        return latest.confidence > config.confidence_threshold
    return latest.confidence >= config.confidence_threshold


def should_terminate(latest: ReasoningOutput, state: WorkflowState, config: WorkflowConfig) -> bool:
    return is_confident(latest, config) or state.step_count >= config.max_reasoning_steps


# Failures that only cost the image branch; budget and replay misses still abort the run.
def _degrades_image_branch(exc: BaseException) -> bool:
    if isinstance(exc, (ReplayMiss, BudgetExceeded, StoreIOError)):
        return False
    return isinstance(exc, (ProviderError, SchemaViolation))


def run_image_branch(
    claim: MultimodalClaim,
    agents: Agents,
    providers: ProviderSuite,
    blocklist: DomainBlocklist,
    trace: WorkflowTrace,
) -> Optional[ImageBranchOutput]:
    """Reverse search, per-match comparison, miscaption and deepfake scoring.

    Returns ``None`` (with a trace warning) when a service fails in a way
    that should not stop text-only verification.
    """
    if not claim.post_image:
        raise ValueError("the image branch needs a post image")
    try:
        return _image_branch(claim, agents, providers, blocklist, trace)
    except Exception as exc:
        if not _degrades_image_branch(exc):
            raise
        logger.warning("image branch degraded: %s", exc)
        trace.emit("image_warning", error=type(exc).__name__, message=str(exc))
        return None


def _image_branch(
    claim: MultimodalClaim,
    agents: Agents,
    providers: ProviderSuite,
    blocklist: DomainBlocklist,
    trace: WorkflowTrace,
) -> ImageBranchOutput:
    image = claim.post_image
    matches: list[ReverseImageMatch] = []
    if providers.reverse_image is None:
        trace.emit("image_warning", error="ProviderUnavailable", message="no reverse image search configured")
    else:
        matches = providers.reverse_image.reverse_image_search(image)
    trace.emit("image_search", matches=len(matches))

    kept: list[tuple[str, ReverseImageMatch]] = []
    for i, m in enumerate(matches, 1):
        mid = f"img-{i}"
        hit = blocklist.match(m.page_url) or blocklist.match(m.image_url)
        if hit:
            trace.emit("filter", stage="image", evidence_id=mid, url=m.source_url, decision="reject", reason="blocked_domain")
            continue
        kept.append((mid, m))

    analyses: list[ImageMatchAnalysis] = []
    related: list[tuple[str, ReverseImageMatch, ImageMatchAnalysis]] = []
    for mid, m in kept:
        verdict = agents.analyze_image_relationship(image, m)
        a = ImageMatchAnalysis(
            evidence_id=mid,
            relationship=verdict.relationship,
            relationship_reasoning=verdict.relationship_reasoning,
            tampering_probability=verdict.tampering_probability,
            tampering_reasoning=verdict.tampering_reasoning,
        )
        analyses.append(a)
        trace.emit("image_match", evidence_id=mid, relationship=a.relationship.value, tampering=a.tampering_probability)
        if a.relationship.is_related:
            related.append((mid, m, a))

    tampering = None
    if related:
        tampering = max(a.tampering_probability or 0.0 for _, _, a in related)

    rates, notes = [], []
    for mid, m, _ in related:
        if not m.page_text.strip():
            continue
        mv = agents.detect_miscaption(claim, m.page_text)
        rates.append(mv.miscaption_rate)
        notes.append(f"[{mid}] {mv.reasoning}")
        trace.emit("image_miscaption", evidence_id=mid, rate=mv.miscaption_rate, band=mv.band)
    miscaption = sum(rates) / len(rates) if rates else None

    deepfake = providers.deepfake.deepfake_score(image)
    analysis = ImageAnalysisResult(
        matches=tuple(analyses),
        tampering_score=tampering,
        miscaption_score=miscaption,
        deepfake_score=deepfake,
        miscaption_reasoning="\n".join(notes),
    )
    evidence = tuple(
        EvidenceItem(
            evidence_id=mid,
            modality=Modality.IMAGE,
            content=m.page_text.strip() or a.relationship_reasoning or "Visually matching image",
            source_url=m.source_url,
            reliability=SourceReliability.UNSURE,
            origin_query=IMAGE_ORIGIN,
        )
        for mid, m, a in related
    )
    trace.emit(
        "image_result",
        related=[mid for mid, _, _ in related],
        tampering_score=tampering,
        miscaption_score=miscaption,
        deepfake_score=deepfake,
    )
    return ImageBranchOutput(analysis, evidence)


class _ClaimRun:
    """Mutable context for one claim; discarded after the run."""

    def __init__(self, claim: MultimodalClaim, config: WorkflowConfig, providers: ProviderSuite, blocklist: DomainBlocklist, agents: Agents):
        self.claim = claim
        self.config = config
        self.providers = providers
        self.blocklist = blocklist
        self.trace = WorkflowTrace()
        self.state = WorkflowState()
        self.budget = CallBudget(config.max_chat_calls)
        chat = BudgetedChat(agents.chat, self.budget)
        self.agents = Agents(chat, retries=config.agent_retries, temperature=agents.temperature, listener=self._on_call)
        self.image_trace = WorkflowTrace()
        self.image_agents = self.agents.with_listener(self._on_image_call)
        self._image_future = None
        self._image_value: Optional[ImageBranchOutput] = None
        self._done: Optional[str] = None

    def _on_call(self, event: dict) -> None:
        self.trace.emit(event.pop("event"), **event)

    def _on_image_call(self, event: dict) -> None:
        self.image_trace.emit(event.pop("event"), **event)

    # -- image branch -------------------------------------------------------

    def start_image_branch(self, pool: Optional[ThreadPoolExecutor]) -> None:
        if not self.claim.post_image:
            self.trace.emit("image_branch", status="skipped", reason="no post image")
            self.state.image_joined = True
            return
        self.trace.emit("image_branch", status="started")
        args = (self.claim, self.image_agents, self.providers, self.blocklist, self.image_trace)
        if pool is None:
            self._image_value = run_image_branch(*args)
        else:
            self._image_future = pool.submit(run_image_branch, *args)

    def join_image_branch(self) -> None:
        if self.state.image_joined:
            return
        self.state.image_joined = True
        out = self._image_future.result() if self._image_future is not None else self._image_value
        self.trace.extend(self.image_trace)
        if out is not None:
            self.state.image_result = out.analysis
            self.state.image_evidence = out.evidence
        self.trace.emit("image_branch", status="joined", available=out is not None)

    # -- retrieval ----------------------------------------------------------

    def load_plan(self, plan: Plan) -> None:
        cfg = self.config
        self.state.current_plan = plan
        items = [PlanItem("validation", v.sentence) for v in plan.validation_list[: cfg.max_validation_items]]
        items += [PlanItem("search", s.information_needed) for s in plan.search_list[: cfg.max_search_items]]
        self.state.pending_items = deque(items)
        self.trace.emit(
            "plan",
            attempt=self.state.replan_count,
            steps=[s.step for s in plan.reasoning_steps],
            validation=[v.sentence for v in plan.validation_list],
            search=[s.information_needed for s in plan.search_list],
        )

    def queries_for(self, item: PlanItem, round_no: int) -> list[str]:
        prior = self.state.prior_queries
        if item.kind == "validation":
            if item.text.strip().casefold() in {q.casefold() for q in prior}:
                self.trace.emit("query_skipped", round=round_no, item=item.text, reason="repeated_query")
                return []
            return [item.text.strip()]
        try:
            queries = self.agents.generate_queries([item.text], self.claim, prior)
        except QueryExhausted as exc:
            self.trace.emit("query_skipped", round=round_no, item=item.text, reason="query_exhausted", detail=str(exc))
            return []
        if not queries:
            self.trace.emit("query_skipped", round=round_no, item=item.text, reason="no_query_needed")
        return queries

    def reliability_of(self, url: str) -> SourceReliability:
        domain = registrable_domain(url)
        cache = self.state.reliability_cache
        if domain in cache:
            self.trace.emit("reliability", domain=domain, reliability=cache[domain].value, cached=True)
            return cache[domain]
        verdict = self.agents.assess_source_reliability(url)
        cache[domain] = verdict.reliability
        self.trace.emit("reliability", domain=domain, reliability=verdict.reliability.value, cached=False)
        return verdict.reliability

    def retrieve(self, query: str, round_no: int, ordinal: int) -> int:
        cfg = self.config
        self.state.prior_queries.append(query)
        results = self.providers.search.web_search(query, cfg.max_results)
        self.trace.emit(
            "search",
            round=round_no,
            query=query,
            key=request_key(SEARCH, search_payload(query)),
            urls=[r.url for r in results],
        )
        usable = []
        for r in results:
            why = rejection_reason(r.url, r.publish_date, self.claim, self.blocklist, strict_dates=cfg.strict_dates)
            if why is None:
                usable.append(r)
            else:
                self.trace.emit("filter", stage="search", url=r.url, decision="reject", reason=why[0], detail=why[1])
        summaries = self.agents.filter_and_summarize(query, usable)
        by_url = {r.url: r for r in usable}
        candidates = []
        for s in summaries:
            ordinal += 1
            result = by_url[s.source_url]
            candidates.append(
                EvidenceItem(
                    evidence_id=f"{round_no}-{ordinal}",
                    modality=Modality.TEXT,
                    content=s.summary,
                    source_url=s.source_url,
                    reliability=self.reliability_of(s.source_url),
                    origin_query=query,
                    publish_date=result.publish_date,
                    retrieval_round=round_no,
                )
            )
        verdict = filter_evidence(candidates, self.claim, self.blocklist, strict_dates=cfg.strict_dates)
        for rej in verdict.rejected:
            self.trace.emit(
                "filter",
                stage="evidence",
                evidence_id=rej.item.evidence_id,
                url=rej.item.source_url,
                decision="reject",
                reason=rej.reason,
            )
        if verdict.admitted:
            self.state.reliable_pool = self.state.reliable_pool.extended(verdict.admitted)
            self.trace.emit("evidence_admitted", round=round_no, ids=[e.evidence_id for e in verdict.admitted])
        return ordinal

    # -- reasoning ----------------------------------------------------------

    def temporary_allowed(self) -> bool:
        if not self.config.count_temporary_steps:
            return True
        # keep one step in reserve for the accumulated call that follows
        return self.state.step_count + 2 <= self.config.max_reasoning_steps

    def temporary_step(self, batch: list[EvidenceItem]) -> list[EvidenceItem]:
        st = self.state
        out = self.agents.reason(self.claim, st.current_plan, batch, None, TEMPORARY)
        st.temporary_history.append(out)
        if self.config.count_temporary_steps:
            st.step_count += 1
        batch_ids = {e.evidence_id for e in batch}
        cited = [i for i in out.cited_text_ids() if i in batch_ids]
        st.consumed.update(batch_ids)
        selected = [e for e in batch if e.evidence_id in set(cited)]
        if selected:
            st.useful_pool = st.useful_pool.extended(selected)
        self.trace.emit(
            "temporary_reasoning",
            batch=[e.evidence_id for e in batch],
            selected=[e.evidence_id for e in selected],
            label=out.label.value,
            confidence=out.confidence,
        )
        return selected

    def accumulated_step(self) -> ReasoningOutput:
        self.join_image_branch()
        st = self.state
        evidence = list(st.useful_pool) + list(st.image_evidence)
        plan = st.current_plan or Plan()
        out = self.agents.reason(self.claim, plan, evidence, st.image_result, ACCUMULATED)
        st.reasoning_history.append(out)
        st.step_count += 1
        self.trace.emit(
            "accumulated_reasoning",
            step=st.step_count,
            evidence=[e.evidence_id for e in evidence],
            image_analysis=st.image_result is not None,
            label=out.label.value,
            confidence=out.confidence,
        )
        if should_terminate(out, st, self.config):
            self._done = "confident" if is_confident(out, self.config) else "step_cap"
            self.trace.emit("terminate", reason=self._done, step=st.step_count)
        return out

    def maybe_trigger_temporary_reasoning(self, *, flush: bool = False) -> Optional[list[EvidenceItem]]:
        pending = self.state.unconsumed()
        need = 1 if flush else self.config.evidence_batch_threshold
        if len(pending) < need or self._done or not self.temporary_allowed():
            return None
        batch = pending[: self.config.evidence_batch_threshold]
        selected = self.temporary_step(batch)
        if selected:
            self.accumulated_step()
        return selected

    # -- driver -------------------------------------------------------------

    def process_plan(self) -> None:
        st = self.state
        while st.pending_items and not self._done:
            item = st.pending_items.popleft()
            st.retrieval_round += 1
            round_no = st.retrieval_round
            self.trace.emit("round", round=round_no, kind=item.kind, item=item.text)
            ordinal = 0
            for q in self.queries_for(item, round_no):
                ordinal = self.retrieve(q, round_no, ordinal)
            while not self._done and self.maybe_trigger_temporary_reasoning() is not None:
                pass
        # Leftovers below the batch size still get one selection pass.
        while not self._done and self.maybe_trigger_temporary_reasoning(flush=True) is not None:
            pass

    def run(self, pool: Optional[ThreadPoolExecutor]) -> RunResult:
        cfg, st = self.config, self.state
        self.trace.emit("start", claim_id=self.claim.claim_id, config=asdict(cfg))
        if self.claim.post_image:
            ensure_decodable(self.claim.post_image)
        self.start_image_branch(pool)
        self.load_plan(self.agents.plan(self.claim))
        while True:
            self.process_plan()
            if self._done:
                break
            if st.replan_count >= cfg.max_replans:
                self.trace.emit("terminate", reason="replans_exhausted", step=st.step_count)
                break
            previous = st.latest() or (st.temporary_history[-1] if st.temporary_history else None)
            st.replan_count += 1
            self.trace.emit("replan", attempt=st.replan_count)
            plan = self.agents.plan(
                self.claim, previous, previous_plan=st.current_plan, attempt=st.replan_count
            )
            self.load_plan(plan)
        if st.latest() is None:
            self.accumulated_step()
        self.join_image_branch()
        evidence = tuple(st.useful_pool) + tuple(st.image_evidence)
        explanation = self.agents.generate_explanation(self.claim, st.latest(), evidence, st.image_result)
        self.trace.emit(
            "explanation",
            label=explanation.label.value,
            binary_label=explanation.binary_label.value,
            confidence=explanation.confidence,
            steps=st.step_count,
            replans=st.replan_count,
            chat_calls=self.budget.used,
        )
        return RunResult(explanation, self.trace, st)


class Orchestrator:
    """Runs claims against one provider suite. Safe to share across threads."""

    def __init__(
        self,
        providers: ProviderSuite,
        config: WorkflowConfig = WorkflowConfig(),
        *,
        blocklist: Optional[DomainBlocklist] = None,
        parallel_image_branch: bool = True,
    ):
        self.providers = providers
        self.config = config
        self.blocklist = blocklist or DomainBlocklist.default()
        self.parallel_image_branch = parallel_image_branch

    def run_claim(self, claim: MultimodalClaim, config: Optional[WorkflowConfig] = None) -> RunResult:
        """Verify one claim. Errors carry the partial trace as ``exc.trace``."""
        cfg = config or self.config
        run = _ClaimRun(claim, cfg, self.providers, self.blocklist, Agents(self.providers.chat))
        pool = ThreadPoolExecutor(max_workers=1) if self.parallel_image_branch and claim.post_image else None
        try:
            return run.run(pool)
        except (FactCheckError, ValueError) as exc:
            if run._image_future is not None and not run.state.image_joined:
                run._image_future.cancel()
            run.trace.emit("error", type=type(exc).__name__, message=str(exc))
            exc.trace = run.trace
            raise
        finally:
            if pool is not None:
                pool.shutdown(wait=True)


def run_claim(
    claim: MultimodalClaim,
    config: WorkflowConfig,
    providers: ProviderSuite,
    *,
    blocklist: Optional[DomainBlocklist] = None,
) -> RunResult:
    return Orchestrator(providers, config, blocklist=blocklist).run_claim(claim)
