"""Text normalization shared by corpus loading and answer comparison."""

from __future__ import annotations

import re
import string
import unicodedata

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)

# \t, \n, \r are Cc but must survive until the whitespace collapse below.
_KEPT_CONTROLS = {"\t", "\n", "\r"}


def _is_dropped(ch: str) -> bool:
    if ch in _KEPT_CONTROLS:
        return False
    return unicodedata.category(ch) in ("Cc", "Cf")


def normalize_text(text: str) -> str:
    """Canonicalize raw text: NFC, strip control/format characters, collapse whitespace.

    Idempotent: normalize_text(normalize_text(x)) == normalize_text(x).
    """
    text = unicodedata.normalize("NFC", text)
    text = "".join(ch for ch in text if not _is_dropped(ch))
    return " ".join(text.split())


def tokenize(text: str) -> list[str]:
    """Whitespace tokenizer over normalized text."""
    return normalize_text(text).split()


def normalize_answer(text: str) -> str:
    """Answer-comparison normal form: lowercase, no punctuation, no articles, single spaces."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())
