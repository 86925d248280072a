"""Review service: a small HTTP API over a baseline plus a label store.

State is rebuilt from the append-only label log at startup and every
mutation goes through one lock, so concurrent readers always see a
consistent snapshot. The API works standalone; a UI directory is optional
and only adds the static routes.
"""

import http.server
import json
import logging
import os
import threading
from typing import Dict, List, Optional
from urllib.parse import parse_qs, urlparse

from .baseline import Baseline
from .detectors import LABEL_NOT_SECRET, LABEL_SECRET, LABEL_UNLABELED
from .evaluation import ConfusionCounts, SplitError, compute_metrics
from .features import FitError
from .labels import (
    GOLD_LABELS,
    LabelRecord,
    append_labels,
    effective_labels,
    finding_id,
    read_labels,
    utc_now_iso,
)
from .models import ThresholdError, TrainingError
from .pipeline import PipelineError, score_items, train_code_model

logger = logging.getLogger(__name__)

CONTEXT_RADIUS = 3

_TRAIN_ERRORS = (PipelineError, TrainingError, ThresholdError, SplitError, FitError)


class ConflictError(RuntimeError):
    """The request is well-formed but the store cannot satisfy it (HTTP 409)."""


class ReviewService:
    """All endpoint behavior, exposed as plain methods for direct testing."""

    def __init__(self, baseline: Baseline, labels_path, root=".",
                 model=None, featurizer=None, ui_dir=None):
        self._lock = threading.Lock()
        self.root = root
        self.labels_path = labels_path
        self.ui_dir = ui_dir
        self._findings = baseline.all_findings()
        self._by_id = {finding_id(f): f for f in self._findings}
        self._order = [finding_id(f) for f in self._findings]
        self._labels: Dict[str, str] = {}
        if labels_path is not None and os.path.exists(labels_path):
            self._labels = effective_labels(read_labels(labels_path))
        self._model = model
        self._featurizer = featurizer
        self._metrics: Optional[dict] = None
        self._context_cache: Dict[str, Optional[List[str]]] = {}
        self._scores: Dict[str, float] = {}
        self._rescore()

    def _rescore(self) -> None:
        self._scores = {}
        if self._model is None:
            return
        scorable = [f for f in self._findings if f.candidate is not None]
        if not scorable:
            return
        scores = score_items(self._model, self._featurizer, scorable)
        for finding, score in zip(scorable, scores):
            self._scores[finding_id(finding)] = float(score)

    def _label_of(self, fid: str) -> str:
        return self._labels.get(fid, self._by_id[fid].label)

    def _context(self, path: str, line_number: int) -> List[list]:
        if path not in self._context_cache:
            full = os.path.join(self.root, path.replace("/", os.sep))
            try:
                with open(full, "r", encoding="utf-8", errors="replace") as fh:
                    self._context_cache[path] = [ln.rstrip("\n") for ln in fh]
            except OSError:
                self._context_cache[path] = None
        lines = self._context_cache[path]
        if lines is None:
            return []
        lo = max(1, line_number - CONTEXT_RADIUS)
        hi = min(len(lines), line_number + CONTEXT_RADIUS)
        return [[n, lines[n - 1]] for n in range(lo, hi + 1)]

    def _view(self, fid: str) -> dict:
        finding = self._by_id[fid]
        score = self._scores.get(fid)
        return {
            "finding_id": fid,
            "path": finding.path,
            "line_number": finding.line_number,
            "detector": finding.detector,
            "entropy_bits": round(finding.entropy_bits, 4),
            "score": None if score is None else round(score, 4),
            "label": self._label_of(fid),
            "context": self._context(finding.path, finding.line_number),
        }

    def findings_page(self, status: Optional[str] = None,
                      offset: int = 0, limit: int = 50) -> dict:
        if status not in (None, "pending", "labeled"):
            raise ValueError(f"unknown status {status!r}")
        if offset < 0 or limit < 1:
            raise ValueError("offset must be >= 0 and limit >= 1")
        with self._lock:
            selected = []
            for fid in self._order:
                labeled = self._label_of(fid) != LABEL_UNLABELED
                if status == "pending" and labeled:
                    continue
                if status == "labeled" and not labeled:
                    continue
                selected.append(fid)
            page = [self._view(fid) for fid in selected[offset:offset + limit]]
        return {"findings": page, "total": len(selected),
                "offset": offset, "limit": limit}

    def label(self, fid: str, label: str, annotator: str = "") -> dict:
        if label not in GOLD_LABELS:
            raise ValueError(f"label must be one of {GOLD_LABELS}, got {label!r}")
        with self._lock:
            if fid not in self._by_id:
                raise KeyError(fid)
            record = LabelRecord(
                finding_id=fid, label=label,
                labeled_at=utc_now_iso(), annotator=annotator,
            )
            if self.labels_path is not None:
                append_labels(self.labels_path, [record])
            self._labels[fid] = label
        return record.to_dict()

    def stats(self) -> dict:
        with self._lock:
            labels = [self._label_of(fid) for fid in self._order]
        return {
            "pending": sum(1 for l in labels if l == LABEL_UNLABELED),
            "labeled": sum(1 for l in labels if l != LABEL_UNLABELED),
            "secrets": sum(1 for l in labels if l == LABEL_SECRET),
            "not_secrets": sum(1 for l in labels if l == LABEL_NOT_SECRET),
            "current_metrics": self._metrics,
        }

    def _evaluate(self, model, featurizer, pairs) -> dict:
        scores = score_items(model, featurizer, [f for f, _ in pairs])
        tp = fp = tn = fn = 0
        for (_, label), score in zip(pairs, scores):
            flagged = score >= model.threshold
            is_secret = label == LABEL_SECRET
            if flagged and is_secret:
                tp += 1
            elif flagged:
                fp += 1
            elif is_secret:
                fn += 1
            else:
                tn += 1
        return compute_metrics(ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)).to_dict()

    def retrain(self) -> dict:
        with self._lock:
            labeled = [
                self._by_id[fid].with_label(self._label_of(fid))
                for fid in self._order
                if self._label_of(fid) in GOLD_LABELS
            ]
            classes = {f.label for f in labeled}
            if len(classes) < 2:
                raise ConflictError(
                    "retraining needs at least one finding labeled secret and "
                    f"one labeled not_secret; have {sorted(classes) or 'none'}"
                )
            if any(f.candidate is None for f in labeled):
                raise ConflictError(
                    "baseline has no candidate plaintext; rescan with "
                    "--keep-plaintext to enable retraining"
                )
            try:
                result = train_code_model(labeled)
            except _TRAIN_ERRORS:
                # Too few labels for a real split; train and evaluate on all.
                result = train_code_model(labeled, ratios=None)
            held_out = result.test
            before = None
            if self._model is not None:
                before = self._evaluate(self._model, self._featurizer, held_out)
            after = self._evaluate(result.model, result.featurizer, held_out)
            self._model = result.model
            self._featurizer = result.featurizer
            self._metrics = after
            self._rescore()
        return {"before": before, "after": after}


class _Handler(http.server.BaseHTTPRequestHandler):
    service: ReviewService  # bound by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        logger.debug("%s %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def _read_json(self) -> dict:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
        except ValueError as exc:
            raise ValueError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ValueError("request body must be a JSON object")
        return payload

    def _query(self) -> dict:
        return parse_qs(urlparse(self.path).query)

    def _static(self, rel: str) -> None:
        ui_dir = self.service.ui_dir
        if ui_dir is None:
            self._send_error_json(404, "no UI bundle installed")
            return
        base = os.path.realpath(ui_dir)
        full = os.path.realpath(os.path.join(base, rel))
        if not (full == base or full.startswith(base + os.sep)) \
                or not os.path.isfile(full):
            self._send_error_json(404, "not found")
            return
        content_types = {
            ".html": "text/html; charset=utf-8",
            ".js": "application/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".map": "application/json; charset=utf-8",
        }
        kind = content_types.get(os.path.splitext(full)[1], "application/octet-stream")
        with open(full, "rb") as fh:
            body = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", kind)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        route = urlparse(self.path).path
        try:
            if route == "/api/findings":
                query = self._query()
                page = self.service.findings_page(
                    status=query.get("status", [None])[0],
                    offset=int(query.get("offset", ["0"])[0]),
                    limit=int(query.get("limit", ["50"])[0]),
                )
                self._send_json(200, page)
            elif route == "/api/stats":
                self._send_json(200, self.service.stats())
            elif route == "/":
                self._static("index.html")
            elif route.startswith("/assets/"):
                self._static(route.lstrip("/"))
            else:
                self._send_error_json(404, "not found")
        except ValueError as exc:
            self._send_error_json(400, str(exc))

    def do_POST(self):
        route = urlparse(self.path).path
        try:
            if route == "/api/labels":
                body = self._read_json()
                record = self.service.label(
                    fid=str(body.get("finding_id", "")),
                    label=str(body.get("label", "")),
                    annotator=str(body.get("annotator", "")),
                )
                self._send_json(200, record)
            elif route == "/api/retrain":
                self._send_json(200, self.service.retrain())
            else:
                self._send_error_json(404, "not found")
        except KeyError:
            self._send_error_json(404, "unknown finding_id")
        except ConflictError as exc:
            self._send_error_json(409, str(exc))
        except ValueError as exc:
            self._send_error_json(400, str(exc))


def make_server(service: ReviewService, host: str = "127.0.0.1",
                port: int = 8000) -> http.server.ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return http.server.ThreadingHTTPServer((host, port), handler)
