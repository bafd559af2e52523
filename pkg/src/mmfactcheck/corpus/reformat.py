"""HTML to text-with-tagged-URLs conversion.

Visible text is kept in document order and every linked resource is written
inline as ``[IMAGE:url]``, ``[VIDEO:url]`` or ``[WEB:url]`` where it occurred.
Anchors keep their text, followed by the tag for their target. The tag kind
is decided by file extension alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser
from urllib.parse import quote, urljoin, urlsplit

from ..errors import HtmlParseError

IMAGE = "IMAGE"
VIDEO = "VIDEO"
WEB = "WEB"

IMAGE_EXTENSIONS = frozenset({"jpg", "jpeg", "png", "gif", "webp"})
VIDEO_EXTENSIONS = frozenset({"mp4", "mov", "avi", "webm", "m3u8"})

TAG_RE = re.compile(r"\[(IMAGE|VIDEO|WEB):([^\]\s]+)\]")

# element -> attribute carrying a resource URL
_URL_ATTRS = {
    "a": "href",
    "img": "src",
    "video": "src",
    "source": "src",
    "iframe": "src",
    "embed": "src",
}
_SKIP = frozenset({"script", "style", "noscript", "head", "template"})
_BLOCK = frozenset(
    {
        "p", "div", "br", "hr", "li", "ul", "ol", "dl", "dt", "dd", "section", "article",
        "header", "footer", "nav", "aside", "main", "blockquote", "figure", "figcaption",
        "table", "tr", "pre", "h1", "h2", "h3", "h4", "h5", "h6", "form",
    }
)
_CELL = frozenset({"td", "th"})
_VOID = frozenset({"br", "hr", "img", "source", "embed", "meta", "link", "input", "wbr", "area", "base", "col", "track", "param"})


def classify_url(url: str, *, image_ext=IMAGE_EXTENSIONS, video_ext=VIDEO_EXTENSIONS) -> str:
    if not url:
        raise ValueError("url must be non-empty")
    path = urlsplit(url).path if "://" in url or url.startswith("/") else url.split("?", 1)[0].split("#", 1)[0]
    name = path.rsplit("/", 1)[-1]
    ext = name.rsplit(".", 1)[-1].lower() if "." in name else ""
    if ext in image_ext:
        return IMAGE
    if ext in video_ext:
        return VIDEO
    return WEB


def usable_url(url: str) -> bool:
    url = url.strip()
    if not url or url.startswith("#"):
        return False
    scheme = urlsplit(url).scheme.lower()
    return scheme not in ("javascript", "mailto", "data", "tel")


def _tag_safe(url: str) -> str:
    # keep tags unambiguous: no whitespace or square brackets inside the URL
    return quote(url, safe=":/?#@!$&'()*+,;=%~.-_")


@dataclass(frozen=True)
class TaggedArticle:
    interleaved_text: str
    word_count: int
    article_url: str = ""
    category: str = ""
    headline: str = ""
    claim: str = ""
    raw_label: str = ""

    def tags(self) -> list[tuple[str, str]]:
        return TAG_RE.findall(self.interleaved_text)

    def links(self) -> list[str]:
        return [url for _, url in self.tags()]


def strip_tags(text: str) -> str:
    return TAG_RE.sub(" ", text)


def count_words(text: str) -> int:
    return len(strip_tags(text).split())


class _Parser(HTMLParser):
    def __init__(self, base_url: str = ""):
        super().__init__(convert_charrefs=True)
        self.base_url = base_url
        self.lines: list[str] = []
        self.current: list[str] = []
        self.title: list[str] = []
        self.skip_depth = 0
        self.in_title = False
        self.anchors: list = []

    def _break(self):
        text = " ".join("".join(self.current).split())
        if text:
            self.lines.append(text)
        self.current = []

    def _emit_url(self, raw: str):
        if not usable_url(raw):
            return
        url = urljoin(self.base_url, raw.strip()) if self.base_url else raw.strip()
        url = _tag_safe(url)
        self.current.append(f" [{classify_url(url)}:{url}] ")

    def handle_starttag(self, tag, attrs):
        if tag == "title":
            self.in_title = True
        if tag in _SKIP:
            if tag not in _VOID:
                self.skip_depth += 1
            return
        if self.skip_depth:
            return
        if tag in _BLOCK:
            self._break()
        elif tag in _CELL:
            self.current.append(" ")
        attr = _URL_ATTRS.get(tag)
        value = dict(attrs).get(attr) if attr else None
        if tag == "a":
            # the target is written after the anchor text, at the closing tag
            self.anchors.append(value)
        elif value is not None:
            self._emit_url(value)

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag not in _VOID:
            self.handle_endtag(tag)

    def handle_endtag(self, tag):
        if tag == "title":
            self.in_title = False
        if tag in _SKIP:
            if tag not in _VOID and self.skip_depth:
                self.skip_depth -= 1
            return
        if self.skip_depth:
            return
        if tag == "a" and self.anchors:
            href = self.anchors.pop()
            if href is not None:
                self._emit_url(href)
        if tag in _BLOCK:
            self._break()
        elif tag in _CELL:
            self.current.append(" ")

    def handle_data(self, data):
        if self.in_title:
            self.title.append(data)
        if self.skip_depth:
            return
        self.current.append(data)

    def finish(self) -> str:
        self.close()
        # anchors left open at EOF still contribute their targets
        while self.anchors:
            href = self.anchors.pop()
            if href is not None:
                self._emit_url(href)
        self._break()
        return "\n".join(self.lines)


def _decode(html: bytes | str) -> str:
    if isinstance(html, str):
        return html
    if not isinstance(html, (bytes, bytearray)):
        raise HtmlParseError(f"expected bytes or str, got {type(html).__name__}")
    try:
        return bytes(html).decode("utf-8")
    except UnicodeDecodeError:
        return bytes(html).decode("cp1252", errors="replace")


def reformat_article(
    html: bytes | str,
    *,
    article_url: str = "",
    category: str = "",
    headline: str = "",
    claim: str = "",
    raw_label: str = "",
) -> TaggedArticle:
    """Convert an article page into interleaved text with inline URL tags.

    Relative URLs are resolved against ``article_url`` when it is given.
    The headline defaults to the document ``<title>``.
    """
    text = _decode(html)
    if not text.strip():
        raise HtmlParseError("empty document")
    if "\x00" in text:
        raise HtmlParseError("document contains NUL bytes; not HTML")
    parser = _Parser(base_url=article_url)
    try:
        parser.feed(text)
        body = parser.finish()
    except Exception as exc:  # html.parser is lenient; anything raised here is a real failure
        raise HtmlParseError(f"cannot parse HTML: {exc}") from exc
    return TaggedArticle(
        interleaved_text=body,
        word_count=count_words(body),
        article_url=article_url,
        category=category,
        headline=headline or " ".join("".join(parser.title).split()),
        claim=claim,
        raw_label=raw_label,
    )
