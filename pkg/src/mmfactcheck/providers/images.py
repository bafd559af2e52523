"""Image references: local file paths or http(s) URLs."""

from __future__ import annotations

import base64
import hashlib
import mimetypes
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from ..errors import ImageDecodeError
from .base import is_url


def ensure_decodable(ref: str) -> str:
    """Raise :class:`ImageDecodeError` unless ``ref`` is a URL or a decodable image file.

    URLs are not fetched here; live backends decode them remotely.
    """
    if is_url(ref):
        return ref
    path = Path(ref)
    if not path.is_file():
        raise ImageDecodeError(f"image not found: {ref}")
    try:
        with Image.open(path) as im:
            im.verify()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"cannot decode image {ref}: {exc}") from None
    return ref


def image_size(ref: str) -> tuple[int, int]:
    ensure_decodable(ref)
    with Image.open(ref) as im:
        return im.size


def image_fingerprint(ref: str) -> dict:
    """Location-independent identity of an image, used for fixture keys."""
    if is_url(ref):
        return {"url": ref}
    ensure_decodable(ref)
    return {"sha256": hashlib.sha256(Path(ref).read_bytes()).hexdigest()}


def data_url(ref: str) -> str:
    """A URL a vision model can consume: URLs pass through, files become base64 data URLs."""
    if is_url(ref):
        return ref
    mime = mimetypes.guess_type(ref)[0] or "image/png"
    payload = base64.b64encode(Path(ref).read_bytes()).decode("ascii")
    return f"data:{mime};base64,{payload}"
