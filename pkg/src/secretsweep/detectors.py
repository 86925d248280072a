"""Heuristic line detectors: keyword assignments, high-entropy strings, key patterns.

All detectors are pure functions of (line, config) and return findings in
left-to-right match order. They never raise on arbitrary text.
"""

import hashlib
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

from .entropy import shannon_entropy

LABEL_UNLABELED = "unlabeled"
LABEL_SECRET = "secret"
LABEL_NOT_SECRET = "not_secret"
LABELS = (LABEL_UNLABELED, LABEL_SECRET, LABEL_NOT_SECRET)

DETECTOR_KEYWORD = "keyword"
DETECTOR_BASE64 = "base64-entropy"
DETECTOR_HEX = "hex-entropy"
DETECTOR_PRIVATE_KEY = "private-key"
DETECTOR_AWS = "aws-key"
ALL_DETECTORS = (
    DETECTOR_KEYWORD,
    DETECTOR_BASE64,
    DETECTOR_HEX,
    DETECTOR_PRIVATE_KEY,
    DETECTOR_AWS,
)

DEFAULT_KEYWORDS = (
    "password",
    "passwd",
    "pwd",
    "secret",
    "token",
    "api_key",
    "apikey",
    "private_key",
    "credential",
    "auth_key",
)

# Values that are obviously not secrets even when they sit on the right-hand
# side of a keyword assignment.
PLACEHOLDER_VALUES = frozenset(
    {"none", "null", "true", "false", "changeme", "<password>"}
)

BASE64_CHARS = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/="
HEX_CHARS = "0123456789abcdefABCDEF"

_PRIVATE_KEY_RE = re.compile(r"-----BEGIN(?: [A-Z0-9]+)* PRIVATE KEY-----")
_AWS_KEY_RE = re.compile(r"AKIA[0-9A-Z]{16}")
_BASE64_RUN_RE = re.compile(r"[A-Za-z0-9+/=]+")
_HEX_RUN_RE = re.compile(r"[0-9a-fA-F]+")


def candidate_hash(candidate: str) -> str:
    return hashlib.sha256(candidate.encode("utf-8")).hexdigest()


@dataclass
class Finding:
    """One candidate secret at a specific file/page line.

    ``candidate`` is None for findings loaded from a redacted baseline; the
    hash remains the stable identity either way.
    """

    path: str
    line_number: int
    detector: str
    candidate: Optional[str]
    candidate_hash: str
    entropy_bits: float
    label: str = LABEL_UNLABELED
    score: Optional[float] = None

    def __post_init__(self):
        if self.line_number < 1:
            raise ValueError(f"line_number must be >= 1, got {self.line_number}")
        if self.candidate is not None:
            if not self.candidate:
                raise ValueError("candidate must be non-empty when present")
            if candidate_hash(self.candidate) != self.candidate_hash:
                raise ValueError("candidate_hash does not match candidate")
        if self.detector not in ALL_DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.label not in LABELS:
            raise ValueError(f"invalid label {self.label!r}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0,1], got {self.score}")

    @property
    def key(self) -> tuple:
        """Identity used for dedup, diffing, and label carry-forward."""
        return (self.path, self.line_number, self.detector, self.candidate_hash)

    def with_label(self, label: str) -> "Finding":
        return replace(self, label=label)


def _make_finding(path, line_number, detector, candidate, label=LABEL_UNLABELED):
    return Finding(
        path=path,
        line_number=line_number,
        detector=detector,
        candidate=candidate,
        candidate_hash=candidate_hash(candidate),
        entropy_bits=shannon_entropy(candidate),
        label=label,
    )


@dataclass(frozen=True)
class DetectorConfig:
    keyword_denylist: tuple = DEFAULT_KEYWORDS
    base64_threshold: float = 4.5
    hex_threshold: float = 3.0
    min_candidate_len: int = 20
    enabled: frozenset = frozenset(ALL_DETECTORS)

    def __post_init__(self):
        if self.base64_threshold < 0 or self.hex_threshold < 0:
            raise ValueError("entropy thresholds must be >= 0")
        if self.min_candidate_len < 1:
            raise ValueError("min_candidate_len must be >= 1")
        unknown = set(self.enabled) - set(ALL_DETECTORS)
        if unknown:
            raise ValueError(f"unknown detectors enabled: {sorted(unknown)}")
        if DETECTOR_KEYWORD in self.enabled and not self.keyword_denylist:
            raise ValueError("keyword detector enabled with empty denylist")
        object.__setattr__(self, "keyword_denylist", tuple(k.lower() for k in self.keyword_denylist))
        object.__setattr__(self, "enabled", frozenset(self.enabled))

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        kwargs = {}
        if "keyword_denylist" in d:
            kwargs["keyword_denylist"] = tuple(d["keyword_denylist"])
        for k in ("base64_threshold", "hex_threshold", "min_candidate_len"):
            if k in d:
                kwargs[k] = d[k]
        if "enabled" in d:
            kwargs["enabled"] = frozenset(d["enabled"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "keyword_denylist": list(self.keyword_denylist),
            "base64_threshold": self.base64_threshold,
            "hex_threshold": self.hex_threshold,
            "min_candidate_len": self.min_candidate_len,
            "enabled": sorted(self.enabled),
        }


@lru_cache(maxsize=32)
def _keyword_pattern(denylist: tuple) -> "re.Pattern":
    # A denylist word counts when it is a whole identifier or the suffix of
    # one (db_password), immediately followed by an assignment separator.
    alternatives = "|".join(sorted(map(re.escape, denylist), key=len, reverse=True))
    return re.compile(
        r"[A-Za-z0-9_]*(?:%s)\s*(?::=|=>|=|:)\s*(\S+)" % alternatives,
        re.IGNORECASE,
    )


def _extract_value(token: str) -> str:
    return token.rstrip(";,").strip("\"'")


def _is_suppressed(value: str) -> bool:
    # Suppress obvious non-secrets: short values, placeholder literals,
    # call expressions (vault lookups, getters) and templated references
    # (${...}, {{...}}) that stand in for a value resolved elsewhere.
    if len(value) < 4:
        return True
    if value.lower() in PLACEHOLDER_VALUES:
        return True
    if "(" in value:
        return True
    if value.startswith("${") or value.startswith("{{"):
        return True
    return False


def detect_keyword(line: str, config: DetectorConfig, path: str = "", line_number: int = 1):
    """Findings for ``<keyword> <sep> <value>`` assignments on one line.

    The candidate is the whitespace-delimited token after the separator with
    surrounding quotes (and trailing ;/,) stripped; short values, placeholder
    literals, call expressions, and templated references are suppressed.
    """
    pattern = _keyword_pattern(config.keyword_denylist)
    findings = []
    for m in pattern.finditer(line):
        value = _extract_value(m.group(1))
        if _is_suppressed(value):
            continue
        findings.append(_make_finding(path, line_number, DETECTOR_KEYWORD, value))
    return findings


def detect_high_entropy(line: str, charset: str, config: DetectorConfig,
                        path: str = "", line_number: int = 1):
    """Findings for maximal charset runs whose entropy clears the threshold.

    ``charset`` is "base64" or "hex"; runs shorter than
    ``config.min_candidate_len`` are ignored.
    """
    if charset == "base64":
        run_re, threshold, detector = _BASE64_RUN_RE, config.base64_threshold, DETECTOR_BASE64
    elif charset == "hex":
        run_re, threshold, detector = _HEX_RUN_RE, config.hex_threshold, DETECTOR_HEX
    else:
        raise ValueError(f"unknown charset {charset!r}")
    findings = []
    for m in run_re.finditer(line):
        run = m.group(0)
        if len(run) < config.min_candidate_len:
            continue
        if shannon_entropy(run) >= threshold:
            findings.append(_make_finding(path, line_number, detector, run))
    return findings


def detect_pattern(line: str, kind: str, path: str = "", line_number: int = 1):
    """Findings for fixed credential patterns: PEM headers and AWS key ids."""
    if kind == DETECTOR_PRIVATE_KEY:
        pattern = _PRIVATE_KEY_RE
    elif kind == DETECTOR_AWS:
        pattern = _AWS_KEY_RE
    else:
        raise ValueError(f"unknown pattern kind {kind!r}")
    return [
        _make_finding(path, line_number, kind, m.group(0))
        for m in pattern.finditer(line)
    ]


def run_detectors(line: str, config: DetectorConfig, path: str = "", line_number: int = 1):
    """All enabled detectors on one line, concatenated."""
    findings = []
    if DETECTOR_KEYWORD in config.enabled:
        findings.extend(detect_keyword(line, config, path, line_number))
    if DETECTOR_BASE64 in config.enabled:
        findings.extend(detect_high_entropy(line, "base64", config, path, line_number))
    if DETECTOR_HEX in config.enabled:
        findings.extend(detect_high_entropy(line, "hex", config, path, line_number))
    if DETECTOR_PRIVATE_KEY in config.enabled:
        findings.extend(detect_pattern(line, DETECTOR_PRIVATE_KEY, path, line_number))
    if DETECTOR_AWS in config.enabled:
        findings.extend(detect_pattern(line, DETECTOR_AWS, path, line_number))
    return findings
