"""Live / record / replay-strict provider modes and the per-claim call budget."""

from __future__ import annotations

import enum
import json
import logging
import threading
from typing import Any, Callable, Optional

from ..errors import BudgetExceeded, ProviderError, ReplayMiss
from .base import (
    ChatProvider,
    ChatRequest,
    ReverseImageMatch,
    ReverseImageProvider,
    SearchProvider,
    SearchResult,
)
from .fixtures import FixtureStore, fixture_key
from .images import ensure_decodable, image_fingerprint

logger = logging.getLogger(__name__)

CHAT = "chat"
SEARCH = "search"
REVERSE_IMAGE = "reverse_image"


class ProviderMode(str, enum.Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY_STRICT = "replay-strict"


def chat_payload(request: ChatRequest) -> dict:
    return {
        "system_prompt": request.system_prompt,
        "user_content": request.user_content,
        "image_attachments": [image_fingerprint(ref) for ref in request.image_attachments],
        "response_schema_id": request.response_schema_id,
        "temperature": request.temperature,
    }


def search_payload(query: str) -> dict:
    # max_results is applied after lookup, so one fixture serves any cap.
    return {"query": query}


def reverse_image_payload(image: str) -> dict:
    return {"image": image_fingerprint(image)}


def request_key(kind: str, payload: dict) -> str:
    return fixture_key(kind, payload)


class _Recorder:
    def __init__(self, mode: ProviderMode | str, store: Optional[FixtureStore]):
        self.mode = ProviderMode(mode)
        self.store = store
        if self.mode is not ProviderMode.LIVE and store is None:
            raise ValueError(f"{self.mode.value} mode needs a fixture store")

    def _through(self, kind: str, payload: dict, live_call: Callable[[], bytes]) -> bytes:
        if self.mode is ProviderMode.REPLAY_STRICT:
            key = request_key(kind, payload)
            data = self.store.lookup(key)
            if data is None:
                raise ReplayMiss(kind, key)
            return data
        data = live_call()
        if self.mode is ProviderMode.RECORD:
            self.store.record(kind, payload, data)
        return data


class RecordingChat(_Recorder):
    """Chat provider honouring one of the three modes. ``live`` may be ``None`` in replay-strict mode."""

    def __init__(self, live: Optional[ChatProvider], mode: ProviderMode | str, store: Optional[FixtureStore] = None):
        super().__init__(mode, store)
        if self.mode is not ProviderMode.REPLAY_STRICT and live is None:
            raise ValueError("live and record modes need a live chat backend")
        self.live = live

    def chat(self, request: ChatRequest) -> str:
        payload = chat_payload(request)
        return self._through(CHAT, payload, lambda: self.live.chat(request).encode("utf-8")).decode("utf-8")


class RecordingSearch(_Recorder):
    def __init__(
        self,
        live: Optional[SearchProvider],
        mode: ProviderMode | str,
        store: Optional[FixtureStore] = None,
        *,
        record_depth: int = 10,
    ):
        super().__init__(mode, store)
        if self.mode is not ProviderMode.REPLAY_STRICT and live is None:
            raise ValueError("live and record modes need a live search backend")
        self.live = live
        self.record_depth = record_depth

    def web_search(self, query: str, max_results: int = 10) -> list[SearchResult]:
        if not query or not query.strip():
            raise ValueError("query must be non-empty")

        def call() -> bytes:
            hits = self.live.web_search(query, max(max_results, self.record_depth))
            return json.dumps([h.to_dict() for h in hits], sort_keys=True).encode("utf-8")

        data = self._through(SEARCH, search_payload(query), call)
        hits = [SearchResult.from_dict(d) for d in json.loads(data)]
        return hits[:max_results]


class RecordingReverseImage(_Recorder):
    def __init__(self, live: Optional[ReverseImageProvider], mode: ProviderMode | str, store: Optional[FixtureStore] = None):
        super().__init__(mode, store)
        if self.mode is not ProviderMode.REPLAY_STRICT and live is None:
            raise ValueError("live and record modes need a live reverse-image backend")
        self.live = live

    def reverse_image_search(self, image: str) -> list[ReverseImageMatch]:
        ensure_decodable(image)

        def call() -> bytes:
            matches = self.live.reverse_image_search(image)
            return json.dumps([m.to_dict() for m in matches], sort_keys=True).encode("utf-8")

        data = self._through(REVERSE_IMAGE, reverse_image_payload(image), call)
        return [ReverseImageMatch.from_dict(d) for d in json.loads(data)]


class CallBudget:
    """Thread-safe counter shared by every chat call made for one claim."""

    def __init__(self, max_calls: int):
        if max_calls < 0:
            raise ValueError("max_calls must be >= 0")
        self.max_calls = max_calls
        self.used = 0
        self._lock = threading.Lock()

    def charge(self) -> None:
        with self._lock:
            if self.used >= self.max_calls:
                raise BudgetExceeded(f"chat call budget of {self.max_calls} exhausted")
            self.used += 1


class BudgetedChat:
    def __init__(self, inner: ChatProvider, budget: CallBudget | int):
        self.inner = inner
        self.budget = budget if isinstance(budget, CallBudget) else CallBudget(budget)

    def chat(self, request: ChatRequest) -> str:
        self.budget.charge()
        return self.inner.chat(request)


class CheckedDeepfakeScorer:
    """Enforces the [0, 1] contract of a deepfake backend."""

    def __init__(self, inner: Any):
        self.inner = inner

    def deepfake_score(self, image: str) -> float:
        ensure_decodable(image)
        score = float(self.inner.deepfake_score(image))
        if not 0.0 <= score <= 1.0:
            raise ProviderError(f"deepfake backend returned {score}, outside [0, 1]")
        return score


class ConstantDeepfakeScorer:
    """Default stand-in for a generative-image detector: returns a configured constant."""

    def __init__(self, score: float = 0.0):
        if not 0.0 <= score <= 1.0:
            raise ValueError("score must lie in [0, 1]")
        self.score = score

    def deepfake_score(self, image: str) -> float:
        ensure_decodable(image)
        return self.score
