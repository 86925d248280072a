"""Synthetic minority-class secrets for training data augmentation."""

import json
import random
from dataclasses import dataclass
from importlib import resources
from typing import List, Optional, Sequence, Tuple

from .detectors import DEFAULT_KEYWORDS, LABEL_SECRET
from .repattern import DEFAULT_MAX_REPEAT, parse_pattern, sample
from .textprep import Row, default_stopwords, normalize_row


@dataclass(frozen=True)
class SecretTemplate:
    name: str
    pattern: str
    weight: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("template name must be non-empty")
        if self.weight <= 0:
            raise ValueError(f"template weight must be > 0, got {self.weight}")
        parse_pattern(self.pattern)  # raises PatternParseError when invalid

    @property
    def ast(self):
        return parse_pattern(self.pattern)


def load_templates(path=None) -> List[SecretTemplate]:
    """The built-in template catalog, or a JSON array from a file."""
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = json.loads(
            resources.files("secretsweep")
            .joinpath("data/templates.json")
            .read_text(encoding="utf-8")
        )
    return [SecretTemplate(name=d["name"], pattern=d["pattern"], weight=d["weight"])
            for d in raw]


def _pick_template(templates: Sequence[SecretTemplate], rng: random.Random) -> SecretTemplate:
    total = sum(t.weight for t in templates)
    point = rng.random() * total
    acc = 0.0
    for template in templates:
        acc += template.weight
        if point < acc:
            return template
    return templates[-1]


def generate_synthetic_secrets(
    templates: Sequence[SecretTemplate],
    n: int,
    seed: int,
    keywords: Tuple[str, ...] = DEFAULT_KEYWORDS,
    max_repeat: int = DEFAULT_MAX_REPEAT,
) -> List[Row]:
    """n secret-labeled rows of "<keyword> = <sampled>" carrier lines.

    The keyword rotates through the denylist so the carrier vocabulary
    matches what the keyword detector would flag.
    """
    if not templates:
        raise ValueError("at least one template is required")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = random.Random(seed)
    stopwords = default_stopwords()
    asts = {t.name: t.ast for t in templates}
    rows = []
    for i in range(n):
        template = _pick_template(templates, rng)
        secret = sample(asts[template.name], rng, max_repeat)
        keyword = keywords[i % len(keywords)]
        raw = f"{keyword} = {secret}"
        rows.append(Row(
            page_id="synthetic",
            line_number=i + 1,
            raw=raw,
            tokens=normalize_row(raw, stopwords),
            label=LABEL_SECRET,
        ))
    return rows
