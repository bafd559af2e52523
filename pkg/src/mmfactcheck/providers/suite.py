from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Optional

from ..errors import ConfigError
from .base import ChatProvider, DeepfakeScorer, ReverseImageProvider, SearchProvider
from .fixtures import FixtureStore
from .replay import (
    CheckedDeepfakeScorer,
    ConstantDeepfakeScorer,
    ProviderMode,
    RecordingChat,
    RecordingReverseImage,
    RecordingSearch,
)


@dataclass
class ProviderSuite:
    """The four service handles one pipeline run needs."""

    chat: ChatProvider
    search: SearchProvider
    reverse_image: Optional[ReverseImageProvider] = None
    deepfake: DeepfakeScorer = field(default_factory=ConstantDeepfakeScorer)


def build_providers(
    mode: ProviderMode | str,
    fixture_dir: Optional[str] = None,
    *,
    chat_base_url: Optional[str] = None,
    chat_model: Optional[str] = None,
    search_url: Optional[str] = None,
    vision_url: Optional[str] = None,
    deepfake_constant: float = 0.0,
    env: Optional[dict[str, str]] = None,
    live: Optional[dict[str, Any]] = None,
) -> ProviderSuite:
    """Wire live backends and the fixture store for ``mode``.

    ``live`` may supply pre-built backends (keys ``chat``, ``search``,
    ``reverse_image``); otherwise HTTP clients are built from the
    ``CHAT_API_KEY``/``SEARCH_API_KEY``/``VISION_API_KEY`` variables. In
    replay-strict mode no live backend is constructed at all.
    """
    mode = ProviderMode(mode)
    env = os.environ if env is None else env
    store = None
    if mode is ProviderMode.REPLAY_STRICT:
        if not fixture_dir:
            raise ConfigError("replay-strict mode requires a fixture directory")
        if not os.path.isdir(fixture_dir):
            raise ConfigError(f"fixture directory {fixture_dir} does not exist")
        store = FixtureStore(fixture_dir, writable=False)
    elif mode is ProviderMode.RECORD:
        if not fixture_dir:
            raise ConfigError("record mode requires a fixture directory")
        store = FixtureStore(fixture_dir)

    backends: dict[str, Any] = dict(live or {})
    if mode is not ProviderMode.REPLAY_STRICT:
        from .live import (
            DEFAULT_CHAT_MODEL,
            DEFAULT_CHAT_URL,
            DEFAULT_SEARCH_URL,
            DEFAULT_VISION_URL,
            OpenAIChat,
            SerperSearch,
            VisionReverseSearch,
        )

        def need(var: str) -> str:
            value = env.get(var, "")
            if not value:
                raise ConfigError(f"{mode.value} mode requires {var}")
            return value

        if "chat" not in backends:
            backends["chat"] = OpenAIChat(
                need("CHAT_API_KEY"),
                base_url=chat_base_url or DEFAULT_CHAT_URL,
                model=chat_model or DEFAULT_CHAT_MODEL,
            )
        if "search" not in backends:
            backends["search"] = SerperSearch(need("SEARCH_API_KEY"), url=search_url or DEFAULT_SEARCH_URL)
        if "reverse_image" not in backends and env.get("VISION_API_KEY"):
            backends["reverse_image"] = VisionReverseSearch(env["VISION_API_KEY"], url=vision_url or DEFAULT_VISION_URL)

    reverse = None
    if mode is ProviderMode.REPLAY_STRICT or backends.get("reverse_image") is not None:
        reverse = RecordingReverseImage(backends.get("reverse_image"), mode, store)
    return ProviderSuite(
        chat=RecordingChat(backends.get("chat"), mode, store),
        search=RecordingSearch(backends.get("search"), mode, store),
        reverse_image=reverse,
        deepfake=CheckedDeepfakeScorer(backends.get("deepfake") or ConstantDeepfakeScorer(deepfake_constant)),
    )
