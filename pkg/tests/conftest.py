import datetime as dt
import json
from pathlib import Path

import pytest

from mmfactcheck.model import EvidenceItem, Modality, MultimodalClaim, SourceReliability

FIXTURES = Path(__file__).parent / "fixtures"


class ScriptedChat:
    """Chat backend answering from per-schema queues (or callables of the request)."""

    def __init__(self, script):
        self.script = {k: list(v) if isinstance(v, (list, tuple)) else v for k, v in script.items()}
        self.requests = []

    def chat(self, request):
        self.requests.append(request)
        entry = self.script[request.response_schema_id]
        if callable(entry):
            value = entry(request)
        elif len(entry) > 1:
            value = entry.pop(0)
        else:
            value = entry[0]
        return value if isinstance(value, str) else json.dumps(value)

    def calls(self, schema_id):
        return [r for r in self.requests if r.response_schema_id == schema_id]


class ListSearch:
    def __init__(self, hits_by_query=None, default=()):
        self.hits_by_query = hits_by_query or {}
        self.default = list(default)
        self.queries = []

    def web_search(self, query, max_results=10):
        self.queries.append(query)
        return list(self.hits_by_query.get(query, self.default))[:max_results]


class ExplodingProvider:
    """Stands in for any live backend; fails the test if touched."""

    def __getattr__(self, name):
        raise AssertionError(f"live provider called: {name}")


def evidence(eid="1-1", url="https://bbc.co.uk/news/1", modality=Modality.TEXT, **kw):
    base = dict(
        evidence_id=eid,
        modality=modality,
        content=kw.pop("content", "Some summary text."),
        source_url=url,
        reliability=kw.pop("reliability", SourceReliability.RELIABLE),
        origin_query=kw.pop("origin_query", "query"),
    )
    base.update(kw)
    return EvidenceItem(**base)


@pytest.fixture
def claim():
    return MultimodalClaim("The mayor opened the bridge in May.", "Look at this!", None, dt.date(2023, 6, 1), "c1")


@pytest.fixture
def agent_outputs():
    return json.loads((FIXTURES / "agent_outputs.json").read_text(encoding="utf-8"))


@pytest.fixture
def png(tmp_path):
    from PIL import Image

    path = tmp_path / "post.png"
    Image.new("RGB", (32, 32), (200, 10, 10)).save(path)
    return str(path)


def suite_cases():
    return json.loads((FIXTURES / "suite.json").read_text(encoding="utf-8"))


def check_argv(case, out_dir):
    """`check` arguments for a suite case; paths are relative to the fixtures directory."""
    argv = ["check", "--fixtures", "replay", "--claim", case["claim"], "--post", case["post"],
            "--date", case["date"], "--claim-id", case["claim_id"], "--out", str(out_dir)]
    if case["image"]:
        argv += ["--image", f"images/{case['image']}"]
    return argv


def terminate_reason(trace_path):
    events = [json.loads(line) for line in Path(trace_path).read_text(encoding="utf-8").splitlines()]
    reasons = [e["reason"] for e in events if e["event"] == "terminate"]
    return reasons[-1] if reasons else None, sum(e["event"] == "replan" for e in events)


@pytest.fixture
def no_network(monkeypatch):
    """Any attempt to open an HTTP connection fails the test."""
    import httpx

    def refuse(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(httpx.Client, "send", refuse)
    monkeypatch.setattr(httpx.AsyncClient, "send", refuse)
