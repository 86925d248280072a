"""Gold labels: an append-only JSONL store keyed by stable finding ids.

The id hashes the finding's identity tuple, not its array position, so a
label survives rescans that shuffle finding order or add neighbors.
Replaying the file from the top reconstructs state exactly; the latest
record per finding wins.
"""

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Sequence

from .detectors import Finding, LABEL_NOT_SECRET, LABEL_SECRET

GOLD_LABELS = (LABEL_SECRET, LABEL_NOT_SECRET)

_HEX_CHARS = frozenset("0123456789abcdef")


class LabelFormatError(ValueError):
    pass


def finding_id(finding: Finding) -> str:
    """Stable 64-hex id over (path, line_number, detector, candidate_hash)."""
    key = (
        f"{finding.path}\n{finding.line_number}\n"
        f"{finding.detector}\n{finding.candidate_hash}"
    )
    return hashlib.sha256(key.encode("utf-8")).hexdigest()


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class LabelRecord:
    finding_id: str
    label: str
    labeled_at: str
    annotator: str = ""

    def __post_init__(self):
        if len(self.finding_id) != 64 or not set(self.finding_id) <= _HEX_CHARS:
            raise ValueError("finding_id must be 64 lowercase hex chars")
        if self.label not in GOLD_LABELS:
            raise ValueError(f"label must be one of {GOLD_LABELS}, got {self.label!r}")

    def to_dict(self) -> dict:
        return {
            "finding_id": self.finding_id,
            "label": self.label,
            "labeled_at": self.labeled_at,
            "annotator": self.annotator,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabelRecord":
        try:
            return cls(
                finding_id=d["finding_id"],
                label=d["label"],
                labeled_at=d["labeled_at"],
                annotator=d.get("annotator", ""),
            )
        except KeyError as exc:
            raise LabelFormatError(f"label record missing field {exc}") from exc


def append_labels(path, records: Iterable[LabelRecord]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def read_labels(path) -> List[LabelRecord]:
    """All records in file order; bad lines name their 1-based line number."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(LabelRecord.from_dict(json.loads(line)))
            except (ValueError, TypeError) as exc:
                raise LabelFormatError(f"line {number}: {exc}") from exc
    return records


def effective_labels(records: Sequence[LabelRecord]) -> Dict[str, str]:
    """finding_id -> label, last write winning."""
    mapping: Dict[str, str] = {}
    for record in records:
        mapping[record.finding_id] = record.label
    return mapping


def apply_labels(findings: Sequence[Finding], mapping: Dict[str, str]) -> List[Finding]:
    """Copies of ``findings`` with store labels overlaid where present."""
    out = []
    for finding in findings:
        label = mapping.get(finding_id(finding))
        out.append(finding if label is None else finding.with_label(label))
    return out
