"""Recipe-driven remediation: rewrite secret-bearing lines into vault lookups.

Planning is pure (it only reads files); applying rewrites whole files through
a temp file and an atomic rename. Plaintext candidates never appear in
patches, reports, or the vault manifest.
"""

import difflib
import fnmatch
import json
import logging
import os
import re
import shutil
import tempfile
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

from .detectors import DetectorConfig, Finding, run_detectors

logger = logging.getLogger(__name__)

_PLACEHOLDER_RE = re.compile(r"\$\{(\w+)\}")
_ALLOWED_PLACEHOLDERS = frozenset({"var", "ref"})


class RecipeError(ValueError):
    """A recipe (or catalog entry) is malformed."""


class StalenessError(RuntimeError):
    """Findings no longer match the files they were scanned from.

    ``findings`` holds every finding whose file, line, or candidate changed
    since the scan that produced it.
    """

    def __init__(self, findings: Sequence[Finding]):
        self.findings = list(findings)
        names = ", ".join(f"{f.path}:{f.line_number}" for f in self.findings)
        super().__init__(f"{len(self.findings)} stale finding(s): {names}")


def vault_ref(identifier: str) -> str:
    """Slug for a vault key: lowercased, non-alphanumeric runs become hyphens."""
    return re.sub(r"[^a-z0-9]+", "-", identifier.lower())


@dataclass(frozen=True)
class Recipe:
    """One rewrite rule: where it applies, what it matches, what it emits.

    ``match`` must declare named groups ``var`` (the left-hand identifier)
    and ``secret`` (the value being replaced). ``replacement`` is a literal
    template over ``${var}`` and ``${ref}``; referencing the secret itself
    is deliberately impossible.
    """

    id: str
    description: str
    file_glob: str
    extensions: Tuple[str, ...]
    match: str
    replacement: str
    priority: int = 0

    def __post_init__(self):
        if not self.id:
            raise RecipeError("recipe id must be non-empty")
        object.__setattr__(
            self, "extensions", tuple(e.lower() for e in self.extensions)
        )
        try:
            compiled = re.compile(self.match)
        except re.error as exc:
            raise RecipeError(f"recipe {self.id}: bad match pattern: {exc}") from exc
        missing = {"var", "secret"} - set(compiled.groupindex)
        if missing:
            raise RecipeError(
                f"recipe {self.id}: match pattern lacks group(s) {sorted(missing)}"
            )
        unknown = set(_PLACEHOLDER_RE.findall(self.replacement)) - _ALLOWED_PLACEHOLDERS
        if unknown:
            raise RecipeError(
                f"recipe {self.id}: replacement references unknown "
                f"placeholder(s) {sorted(unknown)}"
            )

    @property
    def pattern(self) -> "re.Pattern":
        return re.compile(self.match)

    def applies_to(self, path: str) -> bool:
        if self.extensions:
            ext = os.path.splitext(path)[1].lower()
            if ext not in self.extensions:
                return False
        return fnmatch.fnmatch(path, self.file_glob)

    def render(self, var: str, ref: str) -> str:
        values = {"var": var, "ref": ref}
        return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], self.replacement)


def load_recipes(path=None) -> List[Recipe]:
    """The built-in recipe catalog, or a JSON array from a file."""
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = json.loads(
            resources.files("secretsweep")
            .joinpath("data/recipes.json")
            .read_text(encoding="utf-8")
        )
    recipes = []
    for entry in raw:
        try:
            recipes.append(
                Recipe(
                    id=entry["id"],
                    description=entry["description"],
                    file_glob=entry["file_glob"],
                    extensions=tuple(entry["extensions"]),
                    match=entry["match"],
                    replacement=entry["replacement"],
                    priority=int(entry.get("priority", 0)),
                )
            )
        except KeyError as exc:
            raise RecipeError(f"recipe entry missing field {exc}") from exc
    return recipes


@dataclass(frozen=True)
class Patch:
    """A single-line rewrite, planned but not yet applied."""

    path: str
    line_number: int
    old_line: str
    new_line: str
    recipe_id: str
    vault_ref: str
    candidate_hash: str

    def __post_init__(self):
        if self.line_number < 1:
            raise ValueError(f"line_number must be >= 1, got {self.line_number}")
        if self.old_line == self.new_line:
            raise ValueError("patch must change the line")


@dataclass(frozen=True)
class RemediationReport:
    applied: int
    skipped: int
    files_changed: Tuple[str, ...]
    dry_run: bool

    def to_dict(self) -> dict:
        return {
            "applied": self.applied,
            "skipped": self.skipped,
            "files_changed": list(self.files_changed),
            "dry_run": self.dry_run,
        }


def _read_lines(root, rel_path: str) -> Optional[List[str]]:
    full = os.path.join(root, rel_path.replace("/", os.sep))
    try:
        with open(full, "r", encoding="utf-8", errors="replace") as fh:
            return [line.rstrip("\n") for line in fh]
    except OSError:
        return None


def _ordered(recipes: Sequence[Recipe]) -> List[Recipe]:
    # Highest priority first; catalog order breaks ties.
    indexed = list(enumerate(recipes))
    indexed.sort(key=lambda pair: (-pair[1].priority, pair[0]))
    return [recipe for _, recipe in indexed]


def plan_remediation(
    findings: Sequence[Finding],
    recipes: Sequence[Recipe],
    root,
    config: Optional[DetectorConfig] = None,
) -> Tuple[List[Patch], List[Finding]]:
    """Plan one patch per remediable finding.

    Every finding is first revalidated against the live file: the line must
    still exist and re-running the detectors on it must reproduce the same
    (detector, candidate_hash) pair, otherwise a StalenessError lists the
    offenders and nothing is planned. For each fresh finding the
    highest-priority recipe whose glob and extension apply and whose pattern
    matches the line yields the patch; ties go to catalog order. Findings
    with no applicable recipe, and findings whose candidate would survive
    the rewrite (a second secret later on the same line, say), are returned
    as unremediated.

    Callers are expected to pass confirmed secrets; labels are not checked
    here.
    """
    if config is None:
        config = DetectorConfig()
    lines_cache: Dict[str, Optional[List[str]]] = {}
    live_values: List[Optional[str]] = []
    stale: List[Finding] = []
    for finding in findings:
        if finding.path not in lines_cache:
            lines_cache[finding.path] = _read_lines(root, finding.path)
        lines = lines_cache[finding.path]
        if lines is None or finding.line_number > len(lines):
            stale.append(finding)
            live_values.append(None)
            continue
        line = lines[finding.line_number - 1]
        live = next(
            (
                f
                for f in run_detectors(line, config, finding.path, finding.line_number)
                if f.detector == finding.detector
                and f.candidate_hash == finding.candidate_hash
            ),
            None,
        )
        if live is None:
            stale.append(finding)
        live_values.append(None if live is None else live.candidate)
    if stale:
        raise StalenessError(stale)

    ordered = _ordered(recipes)
    patches: List[Patch] = []
    patch_by_line: Dict[Tuple[str, int], Patch] = {}
    unremediated: List[Finding] = []
    for finding, candidate in zip(findings, live_values):
        line = lines_cache[finding.path][finding.line_number - 1]
        existing = patch_by_line.get((finding.path, finding.line_number))
        if existing is not None:
            # The line is already being rewritten; this finding is covered
            # only when that rewrite removes its candidate too.
            if candidate in existing.new_line:
                unremediated.append(finding)
            continue
        match = None
        chosen = None
        for recipe in ordered:
            if not recipe.applies_to(finding.path):
                continue
            match = recipe.pattern.search(line)
            if match is not None:
                chosen = recipe
                break
        if chosen is None:
            unremediated.append(finding)
            continue
        var = match.group("var")
        ref = vault_ref(var)
        new_line = line[: match.start()] + chosen.render(var, ref) + line[match.end():]
        if new_line == line or candidate in new_line:
            unremediated.append(finding)
            continue
        patch = Patch(
            path=finding.path,
            line_number=finding.line_number,
            old_line=line,
            new_line=new_line,
            recipe_id=chosen.id,
            vault_ref=ref,
            candidate_hash=finding.candidate_hash,
        )
        patches.append(patch)
        patch_by_line[(finding.path, finding.line_number)] = patch
    return patches, unremediated


def _split_ending(raw_line: str) -> Tuple[str, str]:
    content = raw_line.rstrip("\r\n")
    return content, raw_line[len(content):]


_REDACTION_MASK = "********"


def _redact(line: str, config: DetectorConfig) -> str:
    """Mask every detector candidate so diffs never show plaintext secrets."""
    candidates = {
        f.candidate for f in run_detectors(line, config) if f.candidate
    }
    for candidate in sorted(candidates, key=len, reverse=True):
        line = line.replace(candidate, _REDACTION_MASK)
    return line


def apply_patches(
    root,
    patches: Sequence[Patch],
    dry_run: bool = False,
    config: Optional[DetectorConfig] = None,
) -> Tuple[RemediationReport, str]:
    """Apply planned patches; return the report and a unified diff.

    Patches are grouped per file and applied bottom-up so earlier line
    numbers stay valid. A patch whose line no longer equals ``old_line`` is
    skipped, which is what makes re-applying the same plan a no-op. Files
    are rewritten through a temp file and ``os.replace``, so a failed write
    leaves the original untouched; files that do not decode as UTF-8 are
    skipped rather than rewritten lossily. ``dry_run`` produces the same
    report and diff without touching disk.

    The diff is for human review, not for ``patch``: any candidate the
    detectors find on a changed file's lines is masked, so removed secrets
    never leak through diff text. ``config`` controls those detectors.
    """
    if config is None:
        config = DetectorConfig()
    by_path: Dict[str, List[Patch]] = {}
    for patch in patches:
        by_path.setdefault(patch.path, []).append(patch)

    applied = 0
    skipped = 0
    changed_paths: List[str] = []
    diff_chunks: List[str] = []
    for path in sorted(by_path):
        full = os.path.join(root, path.replace("/", os.sep))
        try:
            with open(full, "r", encoding="utf-8", newline="") as fh:
                raw_lines = fh.readlines()
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping unpatchable file %s: %s", path, exc)
            skipped += len(by_path[path])
            continue
        new_lines = list(raw_lines)
        file_applied = 0
        for patch in sorted(by_path[path], key=lambda p: p.line_number, reverse=True):
            index = patch.line_number - 1
            if index >= len(new_lines):
                skipped += 1
                continue
            content, ending = _split_ending(new_lines[index])
            if content != patch.old_line:
                skipped += 1
                continue
            new_lines[index] = patch.new_line + ending
            file_applied += 1
        if file_applied == 0:
            continue
        applied += file_applied
        changed_paths.append(path)
        before = [_redact(_split_ending(line)[0], config) + "\n" for line in raw_lines]
        after = [_redact(_split_ending(line)[0], config) + "\n" for line in new_lines]
        diff_chunks.extend(
            difflib.unified_diff(
                before, after, fromfile="a/" + path, tofile="b/" + path, n=3
            )
        )
        if dry_run:
            continue
        directory = os.path.dirname(full) or "."
        fd, temp_path = tempfile.mkstemp(dir=directory, prefix=".remediate-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write("".join(new_lines))
            shutil.copymode(full, temp_path)
            os.replace(temp_path, full)
        except BaseException:
            try:
                os.unlink(temp_path)
            except OSError:
                pass
            raise
    report = RemediationReport(
        applied=applied,
        skipped=skipped,
        files_changed=tuple(changed_paths),
        dry_run=dry_run,
    )
    return report, "".join(diff_chunks)


def emit_vault_manifest(patches: Sequence[Patch]) -> str:
    """JSONL manifest mapping vault refs to redacted patch locations."""
    rows = []
    for patch in patches:
        rows.append(
            json.dumps(
                {
                    "vault_ref": patch.vault_ref,
                    "path": patch.path,
                    "line_number": patch.line_number,
                    "candidate_hash": patch.candidate_hash,
                    "recipe_id": patch.recipe_id,
                },
                sort_keys=True,
            )
        )
    return "".join(row + "\n" for row in rows)
