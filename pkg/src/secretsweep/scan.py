"""Filesystem scanning: walk a tree, run detectors, build a baseline."""

import logging
import os
from typing import List, Optional

from .baseline import Baseline
from .detectors import DetectorConfig, Finding, run_detectors

logger = logging.getLogger(__name__)

_BINARY_SNIFF_BYTES = 8192


def is_binary_file(path) -> bool:
    """True when the first 8 KiB contain a NUL byte."""
    with open(path, "rb") as fh:
        return b"\x00" in fh.read(_BINARY_SNIFF_BYTES)


def iter_source_files(root) -> List[str]:
    """Relative paths (forward slashes) of regular files under ``root``, sorted."""
    if not os.path.isdir(root):
        raise IOError(f"scan root is not a readable directory: {root}")
    paths = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            full = os.path.join(dirpath, name)
            if not os.path.isfile(full):
                continue
            rel = os.path.relpath(full, root)
            paths.append(rel.replace(os.sep, "/"))
    return sorted(paths)


def scan_file(root, rel_path: str, config: DetectorConfig) -> List[Finding]:
    full = os.path.join(root, rel_path.replace("/", os.sep))
    findings = []
    seen = set()
    with open(full, "r", encoding="utf-8", errors="replace") as fh:
        for line_number, line in enumerate(fh, start=1):
            for finding in run_detectors(line.rstrip("\n"), config,
                                         path=rel_path, line_number=line_number):
                if finding.key in seen:
                    continue
                seen.add(finding.key)
                findings.append(finding)
    return findings


def scan_tree(root, config: Optional[DetectorConfig] = None) -> Baseline:
    """Scan every text file under ``root`` and return a Baseline.

    Binary files (NUL in the first 8 KiB) are skipped silently; unreadable
    files are skipped with a warning and counted in ``skipped_files``.
    """
    if config is None:
        config = DetectorConfig()
    results = {}
    skipped = 0
    for rel_path in iter_source_files(root):
        full = os.path.join(root, rel_path.replace("/", os.sep))
        try:
            if is_binary_file(full):
                continue
            findings = scan_file(root, rel_path, config)
        except OSError as exc:
            logger.warning("skipping unreadable file %s: %s", rel_path, exc)
            skipped += 1
            continue
        if findings:
            results[rel_path] = findings
    return Baseline(
        detectors=sorted(config.enabled),
        results=results,
        skipped_files=skipped,
    )
