"""Document-platform text preparation: markup to rows of normalized tokens.

The HTML handling is deliberately best-effort regex stripping, not a real
parser: pages only need to come out as plausible text lines.
"""

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import FrozenSet, List, Optional, Sequence

from .detectors import LABELS, LABEL_UNLABELED
from .features import tokenize
from .porter import stem

_BLOCK_TAG_RE = re.compile(
    r"</?(?:p|div|br|li|tr|h[1-6]|table)\b[^>]*>", re.IGNORECASE
)
_ANY_TAG_RE = re.compile(r"<[^>]*>")
# An unterminated trailing tag ("<unclosed") is dropped; a bare "<" in
# prose ("a < b") is not tag-like and stays.
_UNTERMINATED_TAG_RE = re.compile(r"<[A-Za-z/][^>]*$")
_NUMERIC_ENTITY_RE = re.compile(r"&#(x[0-9a-fA-F]+|[0-9]+);")
_BLANK_RUN_RE = re.compile(r"\n\s*\n+")

_URL_RE = re.compile(r"[A-Za-z][A-Za-z0-9+.-]*://\S+")
_EMAIL_RE = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
_IPV4_RE = re.compile(r"\b(?:\d{1,3}\.){3}\d{1,3}\b")
_HEX_RUN_RE = re.compile(r"\b[0-9a-fA-F]{16,}\b")
_DIGIT_RUN_RE = re.compile(r"\b\d+\b")
_NON_WORD_RE = re.compile(r"[^a-z0-9_ ]")


@dataclass(frozen=True)
class Page:
    id: str
    title: str
    html: str
    space: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("page id must be non-empty")


@dataclass
class Row:
    page_id: str
    line_number: int
    raw: str
    tokens: List[str] = field(default_factory=list)
    label: str = LABEL_UNLABELED

    def __post_init__(self):
        if self.line_number < 1:
            raise ValueError(f"line_number must be >= 1, got {self.line_number}")
        if not self.raw.strip():
            raise ValueError("row raw text must be non-blank")
        if self.label not in LABELS:
            raise ValueError(f"invalid label {self.label!r}")


def _decode_numeric_entity(match: "re.Match") -> str:
    body = match.group(1)
    codepoint = int(body[1:], 16) if body.startswith("x") else int(body)
    try:
        return chr(codepoint)
    except (ValueError, OverflowError):
        return ""


def html_to_text(html: str) -> str:
    text = _BLOCK_TAG_RE.sub("\n", html)
    text = _ANY_TAG_RE.sub("", text)
    text = _UNTERMINATED_TAG_RE.sub("", text)
    text = _NUMERIC_ENTITY_RE.sub(_decode_numeric_entity, text)
    # &amp; last, so "&amp;lt;" decodes to the literal "&lt;".
    for entity, char in (("&lt;", "<"), ("&gt;", ">"), ("&quot;", '"'),
                         ("&apos;", "'"), ("&amp;", "&")):
        text = text.replace(entity, char)
    text = _BLANK_RUN_RE.sub("\n", text)
    return text.strip()


def mask_technical(text: str) -> str:
    """Replace concept-equivalent technical tokens; idempotent."""
    text = _URL_RE.sub("urltok", text)
    text = _EMAIL_RE.sub("emailtok", text)
    text = _IPV4_RE.sub("iptok", text)
    text = _HEX_RUN_RE.sub("hextok", text)
    text = _DIGIT_RUN_RE.sub("numtok", text)
    return text


def load_stopwords(path=None) -> FrozenSet[str]:
    """The built-in English stopword list, or one word per line from a file."""
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            words = fh.read().split()
    else:
        words = (
            resources.files("secretsweep")
            .joinpath("data/stopwords.txt")
            .read_text(encoding="utf-8")
            .split()
        )
    return frozenset(w.lower() for w in words)


_DEFAULT_STOPWORDS: Optional[FrozenSet[str]] = None


def default_stopwords() -> FrozenSet[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = load_stopwords()
    return _DEFAULT_STOPWORDS


def normalize_row(text: str, stopwords: FrozenSet[str]) -> List[str]:
    masked = mask_technical(text).lower()
    cleaned = _NON_WORD_RE.sub(" ", masked)
    stemmed = (stem(t) for t in tokenize(cleaned) if t not in stopwords)
    # A stem can itself land on a stopword ("doings" -> "do"); drop those too.
    return [s for s in stemmed if s not in stopwords]


def page_to_rows(page: Page, stopwords: Optional[FrozenSet[str]] = None) -> List[Row]:
    if stopwords is None:
        stopwords = default_stopwords()
    rows = []
    for raw in html_to_text(page.html).split("\n"):
        if not raw.strip():
            continue
        rows.append(Row(
            page_id=page.id,
            line_number=len(rows) + 1,
            raw=raw,
            tokens=normalize_row(raw, stopwords),
        ))
    return rows


def save_corpus(rows: Sequence[Row], path) -> None:
    """One JSON object per line: {page_id, line_number, raw, tokens, label}."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps({
                "page_id": row.page_id,
                "line_number": row.line_number,
                "raw": row.raw,
                "tokens": row.tokens,
                "label": row.label,
            }, sort_keys=True) + "\n")


def load_corpus(path) -> List[Row]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            rows.append(Row(
                page_id=d["page_id"],
                line_number=d["line_number"],
                raw=d["raw"],
                tokens=list(d["tokens"]),
                label=d.get("label", LABEL_UNLABELED),
            ))
    return rows
