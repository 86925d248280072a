"""Baseline files: the deterministic, diffable record of a scan.

A baseline never stores candidate plaintext, only its SHA-256. A sidecar
with the same shape plus the ``candidate`` field can be written for
workflows (training, remediation review) that need the raw value.
"""

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

from .detectors import Finding, LABELS

BASELINE_VERSION = "1.0"


class BaselineFormatError(ValueError):
    pass


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def sort_findings(findings: List[Finding]) -> List[Finding]:
    return sorted(findings, key=lambda f: (f.line_number, f.detector, f.candidate_hash))


@dataclass
class Baseline:
    version: str = BASELINE_VERSION
    generated_at: str = field(default_factory=_utc_now_iso)
    detectors: List[str] = field(default_factory=list)
    results: Dict[str, List[Finding]] = field(default_factory=dict)
    # Unreadable-file tally from the producing scan; not serialized and not
    # part of baseline identity.
    skipped_files: int = field(default=0, compare=False)

    def __post_init__(self):
        self.detectors = sorted(self.detectors)
        self.results = {
            path: sort_findings(found)
            for path, found in sorted(self.results.items())
        }

    def all_findings(self) -> List[Finding]:
        return [f for path in self.results for f in self.results[path]]

    def __eq__(self, other):
        if not isinstance(other, Baseline):
            return NotImplemented
        return (
            self.version == other.version
            and self.generated_at == other.generated_at
            and self.detectors == other.detectors
            and self.results == other.results
        )


def _finding_to_dict(finding: Finding, keep_plaintext: bool) -> dict:
    d = {
        "detector": finding.detector,
        "line": finding.line_number,
        "candidate_hash": finding.candidate_hash,
        "entropy_bits": round(finding.entropy_bits, 4),
        "label": finding.label,
        "score": None if finding.score is None else round(finding.score, 4),
    }
    if keep_plaintext:
        d["candidate"] = finding.candidate
    return d


def dumps_baseline(baseline: Baseline, keep_plaintext: bool = False) -> str:
    doc = {
        "version": baseline.version,
        "generated_at": baseline.generated_at,
        "detectors": baseline.detectors,
        "results": {
            path: [_finding_to_dict(f, keep_plaintext) for f in findings]
            for path, findings in baseline.results.items()
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def save_baseline(baseline: Baseline, path, keep_plaintext: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_baseline(baseline, keep_plaintext=keep_plaintext))


def _finding_from_dict(path: str, d: dict) -> Finding:
    try:
        label = d.get("label", "unlabeled")
        if label not in LABELS:
            raise BaselineFormatError(f"invalid label {label!r} in {path}")
        return Finding(
            path=path,
            line_number=d["line"],
            detector=d["detector"],
            candidate=d.get("candidate"),
            candidate_hash=d["candidate_hash"],
            entropy_bits=d["entropy_bits"],
            label=label,
            score=d.get("score"),
        )
    except KeyError as exc:
        raise BaselineFormatError(f"finding in {path!r} missing field {exc}") from exc


def loads_baseline(text: str) -> Baseline:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BaselineFormatError(f"baseline is not valid JSON: {exc}") from exc
    for key in ("version", "generated_at", "detectors", "results"):
        if key not in doc:
            raise BaselineFormatError(f"baseline missing key {key!r}")
    results = {
        path: [_finding_from_dict(path, fd) for fd in findings]
        for path, findings in doc["results"].items()
    }
    return Baseline(
        version=doc["version"],
        generated_at=doc["generated_at"],
        detectors=doc["detectors"],
        results=results,
    )


def load_baseline(path) -> Baseline:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_baseline(fh.read())


def diff_baselines(old: Baseline, new: Baseline) -> Tuple[List[Finding], List[Finding]]:
    """(added, removed) keyed on (path, line, detector, candidate_hash).

    Labels from ``old`` are carried onto unchanged findings in ``new``
    (in place). Raises on format-version mismatch.
    """
    if old.version != new.version:
        raise BaselineFormatError(
            f"baseline version mismatch: {old.version} vs {new.version}"
        )
    old_by_key = {f.key: f for f in old.all_findings()}
    new_keys = set()
    added = []
    for path in new.results:
        findings = new.results[path]
        for i, finding in enumerate(findings):
            new_keys.add(finding.key)
            carried = old_by_key.get(finding.key)
            if carried is None:
                added.append(finding)
            elif carried.label != finding.label and finding.label == "unlabeled":
                findings[i] = finding.with_label(carried.label)
    removed = [f for key, f in sorted(old_by_key.items()) if key not in new_keys]
    return added, removed
