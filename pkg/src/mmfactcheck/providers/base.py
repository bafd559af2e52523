"""Provider interfaces and the request/response values that cross them."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Optional, Protocol, runtime_checkable
from urllib.parse import urlsplit

from ..model import parse_date


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_content: str
    response_schema_id: str
    image_attachments: tuple[str, ...] = ()
    temperature: float = 0.0

    def __post_init__(self):
        if not self.user_content or not self.user_content.strip():
            raise ValueError("user_content must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def is_url(text: str) -> bool:
    parts = urlsplit(text)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


@dataclass(frozen=True)
class SearchResult:
    title: str
    snippet: str
    url: str
    publish_date: Optional[dt.date] = None

    def __post_init__(self):
        if not is_url(self.url):
            raise ValueError(f"not a URL: {self.url!r}")

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "snippet": self.snippet,
            "url": self.url,
            "publish_date": self.publish_date.isoformat() if self.publish_date else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchResult":
        return cls(d.get("title", ""), d.get("snippet", ""), d["url"], parse_date(d.get("publish_date")))


@dataclass(frozen=True)
class ReverseImageMatch:
    image_url: str = ""
    page_url: str = ""
    page_text: str = ""
    thumbnail: Optional[str] = None

    def __post_init__(self):
        if not self.image_url and not self.page_url:
            raise ValueError("a reverse-image match needs a page_url or an image_url")

    @property
    def source_url(self) -> str:
        return self.page_url or self.image_url

    def to_dict(self) -> dict:
        return {
            "image_url": self.image_url,
            "page_url": self.page_url,
            "page_text": self.page_text,
            "thumbnail": self.thumbnail,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReverseImageMatch":
        return cls(d.get("image_url", ""), d.get("page_url", ""), d.get("page_text", ""), d.get("thumbnail"))


@runtime_checkable
class ChatProvider(Protocol):
    def chat(self, request: ChatRequest) -> str: ...


@runtime_checkable
class SearchProvider(Protocol):
    def web_search(self, query: str, max_results: int = 10) -> list[SearchResult]: ...


@runtime_checkable
class ReverseImageProvider(Protocol):
    def reverse_image_search(self, image: str) -> list[ReverseImageMatch]: ...


@runtime_checkable
class DeepfakeScorer(Protocol):
    def deepfake_score(self, image: str) -> float: ...
