import datetime as dt
import json

import httpx
import pytest
from hypothesis import given, strategies as st

from mmfactcheck.errors import (
    BudgetExceeded,
    ConfigError,
    ImageDecodeError,
    ProviderError,
    ProviderUnavailable,
    ReplayMiss,
    StoreIOError,
    TransportError,
)
from mmfactcheck.providers import (
    BudgetedChat,
    CallBudget,
    ChatRequest,
    CheckedDeepfakeScorer,
    ConstantDeepfakeScorer,
    FixtureStore,
    ProviderMode,
    RecordingChat,
    RecordingReverseImage,
    RecordingSearch,
    ReverseImageMatch,
    SearchResult,
    build_providers,
    canonicalize,
    fixture_key,
    image_fingerprint,
)
from mmfactcheck.providers.live import OpenAIChat, SerperSearch, VisionReverseSearch, parse_result_date
from mmfactcheck.providers.synthetic import SyntheticChat, SyntheticReverseImage, SyntheticSearch
from conftest import ExplodingProvider

REQ = ChatRequest("system", "user asks", "TR-query")


class EchoChat:
    def __init__(self):
        self.calls = 0

    def chat(self, request):
        self.calls += 1
        return json.dumps({"queries": [request.user_content]})


class FixedSearch:
    def web_search(self, query, max_results=10):
        return [SearchResult("t", "s", f"https://a.org/{i}", dt.date(2023, 1, i + 1)) for i in range(max_results)]


# -- fixture store ---------------------------------------------------------


def test_key_ignores_dict_order_and_whitespace():
    a = fixture_key("chat", {"a": "x  y", "b": [1, {"d": 1, "c": 2}]})
    b = fixture_key("chat", {"b": [1, {"c": 2, "d": 1}], "a": " x y"})
    assert a == b
    assert a != fixture_key("search", {"a": "x y", "b": [1, {"c": 2, "d": 1}]})


@given(st.recursive(st.text(max_size=5) | st.integers(), lambda c: st.lists(c, max_size=3) | st.dictionaries(st.text(max_size=3), c, max_size=3), max_leaves=8))
def test_canonicalize_is_idempotent(value):
    once = canonicalize(value)
    assert canonicalize(once) == once


def test_record_then_lookup_round_trips_bytes(tmp_path):
    store = FixtureStore(tmp_path)
    key = store.record("chat", {"q": 1}, b"hello")
    assert store.lookup(key) == b"hello"
    key2 = store.record("chat", {"q": 2}, b"\xff\x00binary")
    assert store.lookup(key2) == b"\xff\x00binary"
    assert store.lookup("0" * 64) is None
    assert store.keys() == sorted([key, key2])
    report = store.verify()
    assert report.ok and report.checked == 2


def test_verify_lists_tampered_fixture(tmp_path):
    store = FixtureStore(tmp_path)
    key = store.record("chat", {"q": 1}, b"a")
    store.record("chat", {"q": 2}, b"b")
    path = tmp_path / f"{key}.json"
    env = json.loads(path.read_text())
    env["request_canonical"]["q"] = 99
    path.write_text(json.dumps(env))
    report = store.verify()
    assert not report.ok and [name for name, _ in report.corrupted] == [path.name]


def test_read_only_store_refuses_writes(tmp_path):
    with pytest.raises(StoreIOError):
        FixtureStore(tmp_path, writable=False).record("chat", {}, b"x")
    (tmp_path / ("a" * 64 + ".json")).write_text("{not json")
    with pytest.raises(StoreIOError):
        FixtureStore(tmp_path, writable=False).lookup("a" * 64)


# -- record / replay -------------------------------------------------------


def test_record_then_replay_without_backend(tmp_path):
    store = FixtureStore(tmp_path)
    live = EchoChat()
    recorded = RecordingChat(live, "record", store).chat(REQ)
    replayed = RecordingChat(None, "replay-strict", FixtureStore(tmp_path, writable=False)).chat(REQ)
    assert recorded == replayed and live.calls == 1


def test_replay_miss_names_kind_and_key(tmp_path):
    chat = RecordingChat(None, "replay-strict", FixtureStore(tmp_path, writable=False))
    with pytest.raises(ReplayMiss) as info:
        chat.chat(REQ)
    assert info.value.kind == "chat" and len(info.value.key) == 64


def test_replay_strict_never_touches_live_backend(tmp_path):
    store = FixtureStore(tmp_path)
    RecordingChat(EchoChat(), "record", store).chat(REQ)
    chat = RecordingChat(ExplodingProvider(), "replay-strict", store)
    assert json.loads(chat.chat(REQ)) == {"queries": ["user asks"]}


def test_search_replay_applies_cap_after_lookup(tmp_path):
    store = FixtureStore(tmp_path)
    RecordingSearch(FixedSearch(), "record", store).web_search("q", max_results=3)
    replay = RecordingSearch(None, "replay-strict", store)
    assert len(replay.web_search("q", max_results=10)) == 10
    assert [r.url for r in replay.web_search("q", max_results=2)] == ["https://a.org/0", "https://a.org/1"]
    with pytest.raises(ValueError):
        replay.web_search("  ")


def test_reverse_image_replay_keys_on_image_content(tmp_path, png):
    import shutil

    store = FixtureStore(tmp_path / "fx")
    RecordingReverseImage(SyntheticReverseImage(3), "record", store).reverse_image_search(png)
    moved = tmp_path / "elsewhere.png"
    shutil.copy(png, moved)
    assert image_fingerprint(png) == image_fingerprint(str(moved))
    replay = RecordingReverseImage(None, "replay-strict", store)
    assert replay.reverse_image_search(str(moved)) == SyntheticReverseImage(3).reverse_image_search(png)


def test_modes_require_what_they_need(tmp_path):
    with pytest.raises(ValueError):
        RecordingChat(EchoChat(), "record", None)
    with pytest.raises(ValueError):
        RecordingChat(None, "live")
    with pytest.raises(ValueError):
        ProviderMode("playback")


def test_build_providers_validation(tmp_path):
    with pytest.raises(ConfigError):
        build_providers("replay-strict", None)
    with pytest.raises(ConfigError):
        build_providers("replay-strict", str(tmp_path / "missing"))
    with pytest.raises(ConfigError):
        build_providers("live", env={})
    suite = build_providers("replay-strict", str(tmp_path))
    assert suite.reverse_image is not None
    live = build_providers("live", env={}, live={"chat": EchoChat(), "search": FixedSearch()})
    assert live.reverse_image is None


# -- budget and scorers ----------------------------------------------------


def test_budget_counts_and_stops():
    chat = BudgetedChat(EchoChat(), 2)
    chat.chat(REQ)
    chat.chat(REQ)
    assert chat.budget.used == 2
    with pytest.raises(BudgetExceeded):
        chat.chat(REQ)
    with pytest.raises(ValueError):
        CallBudget(-1)


def test_deepfake_score_contract(png):
    assert ConstantDeepfakeScorer(0.3).deepfake_score(png) == 0.3

    class Bad:
        def deepfake_score(self, image):
            return 1.7

    with pytest.raises(ProviderError):
        CheckedDeepfakeScorer(Bad()).deepfake_score(png)
    with pytest.raises(ValueError):
        ConstantDeepfakeScorer(2)


def test_undecodable_image_rejected(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(ImageDecodeError):
        ConstantDeepfakeScorer().deepfake_score(str(bad))
    with pytest.raises(ImageDecodeError):
        ConstantDeepfakeScorer().deepfake_score(str(tmp_path / "missing.png"))


# -- synthetic backends ----------------------------------------------------


def test_synthetic_backends_are_deterministic():
    assert SyntheticChat(5).chat(REQ) == SyntheticChat(5).chat(REQ)
    assert SyntheticSearch(5).web_search("storm") == SyntheticSearch(5).web_search("storm")


# -- live clients over a mock transport ---------------------------------------


def _transport(handler):
    return httpx.MockTransport(handler)


def test_openai_chat_request_shape(png):
    seen = {}

    def handler(request):
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"message": {"content": '{"queries": []}'}}]})

    chat = OpenAIChat("k", base_url="https://llm.test/v1", model="m", transport=_transport(handler))
    out = chat.chat(ChatRequest("sys", "hi", "TR-query", image_attachments=(png,)))
    assert out == '{"queries": []}'
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["model"] == "m"
    parts = seen["body"]["messages"][1]["content"]
    assert parts[0] == {"type": "text", "text": "hi"}
    assert parts[1]["image_url"]["url"].startswith("data:image/png;base64,")


def test_transport_errors_retry_then_fail():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503)

    chat = OpenAIChat("k", retries=2, transport=_transport(handler))
    with pytest.raises(TransportError):
        chat.chat(REQ)
    assert len(calls) == 3


def test_bad_credentials_are_not_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401)

    with pytest.raises(ProviderUnavailable):
        SerperSearch("k", transport=_transport(handler)).web_search("q")
    assert len(calls) == 1
    with pytest.raises(ProviderUnavailable):
        SerperSearch("")


def test_serper_parses_results():
    def handler(request):
        assert request.headers["x-api-key"] == "k"
        assert json.loads(request.content) == {"q": "storm", "num": 10}
        return httpx.Response(
            200,
            json={
                "organic": [
                    {"title": "A", "snippet": "s", "link": "https://a.org/1", "date": "Jul 13, 2023"},
                    {"title": "B", "snippet": "s", "link": "not a url"},
                    {"title": "C", "snippet": "s", "link": "https://c.org/1", "date": "3 days ago"},
                ]
            },
        )

    hits = SerperSearch("k", transport=_transport(handler)).web_search("storm")
    assert [h.url for h in hits] == ["https://a.org/1", "https://c.org/1"]
    assert hits[0].publish_date == dt.date(2023, 7, 13) and hits[1].publish_date is None


def test_vision_parses_matches(png):
    def handler(request):
        body = json.loads(request.content)
        assert "content" in body["requests"][0]["image"]
        return httpx.Response(
            200,
            json={
                "responses": [
                    {
                        "webDetection": {
                            "pagesWithMatchingImages": [
                                {"url": "https://p.org/1", "pageTitle": "<b>Flood</b> 2019", "fullMatchingImages": [{"url": "https://p.org/1.jpg"}]}
                            ]
                        }
                    }
                ]
            },
        )

    out = VisionReverseSearch("k", transport=_transport(handler)).reverse_image_search(png)
    assert out == [ReverseImageMatch("https://p.org/1.jpg", "https://p.org/1", "Flood 2019")]


@pytest.mark.parametrize(
    "text,date",
    [("2024-05-01", dt.date(2024, 5, 1)), ("Jul 13, 1985", dt.date(1985, 7, 13)), ("13 July 1985", dt.date(1985, 7, 13)), ("2 weeks ago", None), ("", None), ("garbage", None)],
)
def test_result_dates(text, date):
    assert parse_result_date(text) == date
