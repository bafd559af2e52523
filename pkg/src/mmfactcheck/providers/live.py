"""HTTP clients for the live services.

* chat: any OpenAI-compatible ``/chat/completions`` endpoint
* search: Serper (``google.serper.dev``)
* reverse image search: Google Cloud Vision ``WEB_DETECTION``

Transport failures are retried a fixed number of times and then surface as
:class:`TransportError`.
"""

from __future__ import annotations

import base64
import datetime as dt
import logging
import re
from pathlib import Path
from typing import Any, Optional

import httpx

from ..errors import ProviderUnavailable, TransportError
from .base import ChatRequest, ReverseImageMatch, SearchResult, is_url
from .images import data_url, ensure_decodable

logger = logging.getLogger(__name__)

DEFAULT_CHAT_URL = "https://api.openai.com/v1"
DEFAULT_CHAT_MODEL = "gpt-4o-mini"
DEFAULT_SEARCH_URL = "https://google.serper.dev/search"
DEFAULT_VISION_URL = "https://vision.googleapis.com/v1/images:annotate"


class _HttpClient:
    def __init__(self, *, timeout: float = 60.0, retries: int = 2, transport: Optional[httpx.BaseTransport] = None):
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _post(self, url: str, **kwargs: Any) -> Any:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(url, **kwargs)
            except httpx.HTTPError as exc:
                last = exc
                logger.warning("POST %s failed (%d/%d): %s", url, attempt + 1, self.retries + 1, exc)
                continue
            if resp.status_code in (401, 403):
                raise ProviderUnavailable(f"{url} rejected credentials ({resp.status_code})")
            if resp.status_code >= 500 or resp.status_code == 429:
                last = TransportError(f"{url} returned {resp.status_code}")
                logger.warning("POST %s returned %d (%d/%d)", url, resp.status_code, attempt + 1, self.retries + 1)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"{url} returned {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise TransportError(f"{url} returned non-JSON body") from exc
        raise TransportError(f"{url} failed after {self.retries + 1} attempts: {last}")

    def close(self) -> None:
        self._client.close()


class OpenAIChat(_HttpClient):
    def __init__(
        self,
        api_key: str,
        *,
        base_url: str = DEFAULT_CHAT_URL,
        model: str = DEFAULT_CHAT_MODEL,
        **kwargs: Any,
    ):
        if not api_key:
            raise ProviderUnavailable("CHAT_API_KEY is not set")
        super().__init__(**kwargs)
        self.api_key = api_key
        self.base_url = base_url.rstrip("/")
        self.model = model

    def chat(self, request: ChatRequest) -> str:
        if request.image_attachments:
            content: Any = [{"type": "text", "text": request.user_content}]
            for ref in request.image_attachments:
                content.append({"type": "image_url", "image_url": {"url": data_url(ref)}})
        else:
            content = request.user_content
        body = {
            "model": self.model,
            "temperature": request.temperature,
            "response_format": {"type": "json_object"},
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": content},
            ],
        }
        data = self._post(
            f"{self.base_url}/chat/completions",
            json=body,
            headers={"Authorization": f"Bearer {self.api_key}"},
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected chat response shape: {exc}") from None


_RELATIVE = re.compile(r"^\d+\s+(second|minute|hour|day|week|month|year)s?\s+ago$", re.I)


def parse_result_date(text: Optional[str]) -> Optional[dt.date]:
    """Dates as search backends print them ("Jul 13, 1985", "2024-05-01"); relative dates are dropped."""
    if not text:
        return None
    text = text.strip()
    if _RELATIVE.match(text):
        return None
    for fmt in ("%Y-%m-%d", "%b %d, %Y", "%B %d, %Y", "%d %b %Y", "%d %B %Y"):
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


class SerperSearch(_HttpClient):
    def __init__(self, api_key: str, *, url: str = DEFAULT_SEARCH_URL, **kwargs: Any):
        if not api_key:
            raise ProviderUnavailable("SEARCH_API_KEY is not set")
        super().__init__(**kwargs)
        self.api_key = api_key
        self.url = url

    def web_search(self, query: str, max_results: int = 10) -> list[SearchResult]:
        if not query.strip():
            raise ValueError("query must be non-empty")
        data = self._post(self.url, json={"q": query, "num": max_results}, headers={"X-API-KEY": self.api_key})
        out = []
        for item in data.get("organic", []):
            link = item.get("link", "")
            if not is_url(link):
                continue
            out.append(
                SearchResult(
                    title=item.get("title", ""),
                    snippet=item.get("snippet", ""),
                    url=link,
                    publish_date=parse_result_date(item.get("date")),
                )
            )
        return out[:max_results]


class VisionReverseSearch(_HttpClient):
    """Reverse image search via web detection; the page title stands in for page text."""

    def __init__(self, api_key: str, *, url: str = DEFAULT_VISION_URL, max_results: int = 10, **kwargs: Any):
        if not api_key:
            raise ProviderUnavailable("VISION_API_KEY is not set")
        super().__init__(**kwargs)
        self.api_key = api_key
        self.url = url
        self.max_results = max_results

    def reverse_image_search(self, image: str) -> list[ReverseImageMatch]:
        ensure_decodable(image)
        if is_url(image):
            source = {"source": {"imageUri": image}}
        else:
            source = {"content": base64.b64encode(Path(image).read_bytes()).decode("ascii")}
        body = {
            "requests": [
                {
                    "image": source,
                    "features": [{"type": "WEB_DETECTION", "maxResults": self.max_results}],
                }
            ]
        }
        data = self._post(self.url, params={"key": self.api_key}, json=body)
        try:
            web = data["responses"][0].get("webDetection", {})
        except (KeyError, IndexError, TypeError):
            raise TransportError("unexpected vision response shape") from None
        out = []
        for page in web.get("pagesWithMatchingImages", []):
            images = page.get("fullMatchingImages") or page.get("partialMatchingImages") or [{}]
            title = re.sub(r"<[^>]+>", "", page.get("pageTitle", ""))
            out.append(
                ReverseImageMatch(
                    image_url=images[0].get("url", ""),
                    page_url=page.get("url", ""),
                    page_text=title,
                )
            )
        return out[: self.max_results]
