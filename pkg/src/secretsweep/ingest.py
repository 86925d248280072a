"""Document-platform ingestion: paginated HTTP fetch, fixtures, corpus files.

The connector speaks a small REST dialect: GET
``{base_url}/rest/api/content?start=S&limit=L&expand=body.storage`` returning
``{"results": [{id, title, body: {storage: {value}}}], "size": N}``. The
bearer token is read from the environment at call time and never written to
logs, errors, or corpus files.
"""

import json
import logging
import os
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Union

from .detectors import LABEL_UNLABELED
from .textprep import Page, Row, html_to_text

logger = logging.getLogger(__name__)

_HEADING_RE = re.compile(r"<h[1-6][^>]*>(.*?)</h[1-6]\s*>", re.IGNORECASE | re.DOTALL)


class ConnectorError(RuntimeError):
    """Base class for fetch failures."""


class AuthError(ConnectorError):
    """The platform rejected our credentials (HTTP 401/403); not retried."""


class TransportError(ConnectorError):
    """Timeouts or 5xx responses survived every retry."""


class ResponseFormatError(ConnectorError):
    """A response body was not the JSON shape the connector expects."""


class CorpusFormatError(ValueError):
    """A corpus JSONL line could not be parsed."""


@dataclass(frozen=True)
class ConnectorConfig:
    base_url: str
    auth_token_env: str = "SECRETSWEEP_TOKEN"
    page_size: int = 50
    max_retries: int = 3
    timeout: float = 30.0

    def __post_init__(self):
        if not self.base_url:
            raise ValueError("base_url must be non-empty")
        if self.page_size < 1:
            raise ValueError(f"page_size must be >= 1, got {self.page_size}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")


def _fetch_body(url: str, token: str, config: ConnectorConfig, sleep) -> bytes:
    """One GET with bearer auth, retrying timeouts and 5xx with backoff."""
    delay = 1.0
    attempt = 0
    while True:
        request = urllib.request.Request(url)
        if token:
            request.add_header("Authorization", "Bearer " + token)
        try:
            with urllib.request.urlopen(request, timeout=config.timeout) as response:
                return response.read()
        except urllib.error.HTTPError as exc:
            if exc.code in (401, 403):
                raise AuthError(f"authentication rejected with HTTP {exc.code}") from None
            if not 500 <= exc.code < 600:
                raise TransportError(f"unexpected HTTP {exc.code} from {url}") from None
            failure = f"HTTP {exc.code}"
        except OSError as exc:
            failure = f"{type(exc).__name__}: {exc}"
        if attempt >= config.max_retries:
            raise TransportError(
                f"{failure} from {url} after {attempt + 1} attempt(s)"
            ) from None
        logger.warning("retrying %s in %.0fs after %s", url, delay, failure)
        sleep(delay)
        delay *= 2.0
        attempt += 1


def _page_from_item(item: dict, start: int) -> Page:
    try:
        body = item.get("body", {}).get("storage", {}).get("value", "")
        return Page(
            id=str(item["id"]),
            title=str(item.get("title", "")),
            html=str(body),
            space=item.get("space"),
        )
    except (KeyError, AttributeError, TypeError, ValueError) as exc:
        raise ResponseFormatError(
            f"bad page object at start offset {start}: {exc}"
        ) from exc


def fetch_pages(config: ConnectorConfig, sleep=time.sleep) -> Iterator[Page]:
    """Stream every page, paginating until a short response.

    ``sleep`` exists for tests: it receives the backoff delays (1, 2, 4, ...
    seconds) that would otherwise be slept through.
    """
    token = os.environ.get(config.auth_token_env, "")
    base = config.base_url.rstrip("/")
    start = 0
    while True:
        url = (
            f"{base}/rest/api/content"
            f"?start={start}&limit={config.page_size}&expand=body.storage"
        )
        body = _fetch_body(url, token, config, sleep)
        try:
            payload = json.loads(body)
        except ValueError as exc:
            raise ResponseFormatError(
                f"malformed JSON at start offset {start}: {exc}"
            ) from None
        results = payload.get("results")
        if not isinstance(results, list):
            raise ResponseFormatError(
                f"missing results list at start offset {start}"
            )
        size = int(payload.get("size", len(results)))
        for item in results:
            yield _page_from_item(item, start)
        if size < config.page_size:
            return
        start += size


def _first_heading(html: str) -> Optional[str]:
    match = _HEADING_RE.search(html)
    if match is None:
        return None
    title = html_to_text(match.group(1))
    return title or None


def load_fixture_dir(directory) -> List[Page]:
    """Every ``*.html`` file under ``directory`` as a Page, in filename order.

    The page id is the filename stem; the title is the first heading in the
    file, falling back to the stem.
    """
    pages = []
    for name in sorted(os.listdir(directory)):
        if not name.lower().endswith(".html"):
            continue
        full = os.path.join(directory, name)
        if not os.path.isfile(full):
            continue
        with open(full, "r", encoding="utf-8", errors="replace") as fh:
            html = fh.read()
        stem = os.path.splitext(name)[0]
        pages.append(Page(id=stem, title=_first_heading(html) or stem, html=html))
    return pages


def _item_to_dict(item: Union[Page, Row]) -> dict:
    if isinstance(item, Page):
        return {"id": item.id, "title": item.title, "html": item.html,
                "space": item.space}
    if isinstance(item, Row):
        return {"page_id": item.page_id, "line_number": item.line_number,
                "raw": item.raw, "tokens": item.tokens, "label": item.label}
    raise TypeError(f"cannot persist {type(item).__name__} objects")


def _item_from_dict(d: dict) -> Union[Page, Row]:
    if "page_id" in d:
        return Row(
            page_id=d["page_id"],
            line_number=d["line_number"],
            raw=d["raw"],
            tokens=list(d["tokens"]),
            label=d.get("label", LABEL_UNLABELED),
        )
    if "id" in d:
        return Page(
            id=d["id"],
            title=d.get("title", ""),
            html=d.get("html", ""),
            space=d.get("space"),
        )
    raise KeyError("neither a page ('id') nor a row ('page_id')")


def persist_corpus(items: Sequence[Union[Page, Row]], path) -> None:
    """Write pages or rows as JSONL, one object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(_item_to_dict(item), sort_keys=True) + "\n")


def load_corpus(path) -> List[Union[Page, Row]]:
    """Read a JSONL corpus written by persist_corpus.

    Bad lines raise CorpusFormatError naming the 1-based line number.
    """
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                items.append(_item_from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise CorpusFormatError(f"line {number}: {exc}") from exc
    return items
