"""Content-addressed fixture store backing record/replay runs.

A fixture key is the SHA-256 digest of ``{"kind": ..., "request": ...}``
after canonicalization: object keys sorted, string whitespace collapsed.
Each fixture lives in ``<dir>/<key>.json`` as an envelope::

    {"kind": "chat", "key": "...", "request_canonical": {...},
     "response_bytes": "...", "encoding": "utf-8" | "base64",
     "recorded_at": "2026-01-01T00:00:00+00:00"}
"""

from __future__ import annotations

import base64
import datetime as dt
import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from ..errors import StoreIOError


def canonicalize(value: Any) -> Any:
    """Normalize a JSON-compatible value: parse JSON text, collapse whitespace in strings."""
    if isinstance(value, (bytes, bytearray)):
        value = value.decode("utf-8")
    if isinstance(value, dict):
        return {str(k): canonicalize(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (list, tuple)):
        return [canonicalize(v) for v in value]
    if isinstance(value, str):
        return " ".join(value.split())
    return value


def canonical_json(kind: str, request: Any) -> str:
    if isinstance(request, (str, bytes, bytearray)):
        request = json.loads(request)
    doc = {"kind": kind, "request": canonicalize(request)}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fixture_key(kind: str, request: Any) -> str:
    return hashlib.sha256(canonical_json(kind, request).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class VerifyReport:
    checked: int
    corrupted: tuple[tuple[str, str], ...]  # (file name, reason)

    @property
    def ok(self) -> bool:
        return not self.corrupted


class FixtureStore:
    """Directory of fixture envelopes. Writes are serialized and atomic."""

    def __init__(self, root: str | os.PathLike, *, writable: bool = True):
        self.root = Path(root)
        self.writable = writable
        self._lock = threading.Lock()
        if writable:
            try:
                self.root.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise StoreIOError(f"cannot create fixture dir {self.root}: {exc}") from None

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def record(self, kind: str, request: Any, response: bytes, *, recorded_at: Optional[str] = None) -> str:
        if not self.writable:
            raise StoreIOError("fixture store opened read-only")
        key = fixture_key(kind, request)
        try:
            text, encoding = response.decode("utf-8"), "utf-8"
        except UnicodeDecodeError:
            text, encoding = base64.b64encode(response).decode("ascii"), "base64"
        envelope = {
            "kind": kind,
            "key": key,
            "request_canonical": json.loads(canonical_json(kind, request))["request"],
            "response_bytes": text,
            "encoding": encoding,
            "recorded_at": recorded_at or dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        }
        data = json.dumps(envelope, indent=2, sort_keys=True, ensure_ascii=False)
        with self._lock:
            try:
                fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(data)
                os.replace(tmp, self._path(key))
            except OSError as exc:
                raise StoreIOError(f"cannot write fixture {key}: {exc}") from None
        return key

    def lookup(self, key: str) -> Optional[bytes]:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            envelope = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreIOError(f"unreadable fixture {path.name}: {exc}") from None
        if envelope.get("encoding") == "base64":
            return base64.b64decode(envelope["response_bytes"])
        return envelope["response_bytes"].encode("utf-8")

    def lookup_request(self, kind: str, request: Any) -> Optional[bytes]:
        return self.lookup(fixture_key(kind, request))

    def keys(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.stem for p in self.root.glob("*.json"))

    def verify(self) -> VerifyReport:
        """Check every envelope's file name against the digest of its stored request."""
        corrupted = []
        files = sorted(self.root.glob("*.json")) if self.root.exists() else []
        for path in files:
            try:
                env = json.loads(path.read_text(encoding="utf-8"))
                expected = fixture_key(env["kind"], env["request_canonical"])
                if expected != path.stem:
                    corrupted.append((path.name, "request digest does not match file name"))
                elif env.get("key", path.stem) != path.stem:
                    corrupted.append((path.name, "envelope key does not match file name"))
                elif "response_bytes" not in env:
                    corrupted.append((path.name, "missing response_bytes"))
            except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
                corrupted.append((path.name, f"unreadable envelope: {exc}"))
        return VerifyReport(len(files), tuple(corrupted))
