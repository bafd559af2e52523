from .base import (
    ChatProvider,
    ChatRequest,
    DeepfakeScorer,
    ReverseImageMatch,
    ReverseImageProvider,
    SearchProvider,
    SearchResult,
)
from .fixtures import FixtureStore, VerifyReport, canonical_json, canonicalize, fixture_key
from .images import ensure_decodable, image_fingerprint
from .replay import (
    BudgetedChat,
    CallBudget,
    CheckedDeepfakeScorer,
    ConstantDeepfakeScorer,
    ProviderMode,
    RecordingChat,
    RecordingReverseImage,
    RecordingSearch,
)
from .suite import ProviderSuite, build_providers

__all__ = [
    "ChatProvider",
    "ChatRequest",
    "DeepfakeScorer",
    "ReverseImageMatch",
    "ReverseImageProvider",
    "SearchProvider",
    "SearchResult",
    "FixtureStore",
    "VerifyReport",
    "canonical_json",
    "canonicalize",
    "fixture_key",
    "ensure_decodable",
    "image_fingerprint",
    "BudgetedChat",
    "CallBudget",
    "CheckedDeepfakeScorer",
    "ConstantDeepfakeScorer",
    "ProviderMode",
    "RecordingChat",
    "RecordingReverseImage",
    "RecordingSearch",
    "ProviderSuite",
    "build_providers",
]
