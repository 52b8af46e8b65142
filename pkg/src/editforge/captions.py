"""Composite caption generation for mixed clips.

The insertion center classifies the mix into a time band (before / middle /
after); a weighted template table per band then combines the background and
event prompts into one sentence. The default table ships as templates.json
and can be replaced by any file with the same layout.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import EmptyPrompt, SchemaViolation
from .rng import derived_rng

PLACEHOLDER_A = "⟨PA⟩"
PLACEHOLDER_B = "⟨PB⟩"

DEFAULT_SEED = 1984


class Band(str, Enum):
    BEFORE = "before"
    MIDDLE = "middle"
    AFTER = "after"


@dataclass(frozen=True)
class CaptionConfig:
    """Band boundaries and the global seed for caption drawing."""

    split1_s: float = 3.0
    split2_s: float = 7.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0 < self.split1_s < self.split2_s:
            raise ValueError("need 0 < split1_s < split2_s")


@dataclass(frozen=True)
class TemplateRule:
    band: Band
    weight: float
    pattern: str


TemplateTable = dict[Band, list[TemplateRule]]

_WEIGHT_SUM_TOL = 1e-9


def load_templates(path: str | Path | None = None) -> TemplateTable:
    """Load a template table, validating that weights sum to 1 per band."""
    if path is None:
        text = resources.files(__package__).joinpath("templates.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    table: TemplateTable = {}
    for band in Band:
        rows = raw.get(band.value)
        if not rows:
            raise SchemaViolation(f"template table missing band {band.value!r}")
        rules = [TemplateRule(band, float(r["weight"]), str(r["pattern"])) for r in rows]
        total = sum(r.weight for r in rules)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise SchemaViolation(f"band {band.value!r} weights sum to {total}, not 1")
        if any(not 0 < r.weight <= 1 for r in rules):
            raise SchemaViolation(f"band {band.value!r} has a weight outside (0, 1]")
        table[band] = rules
    return table


_DEFAULT_TABLE: TemplateTable | None = None


def default_templates() -> TemplateTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_templates()
    return _DEFAULT_TABLE


def classify_center(center_s: float, cfg: CaptionConfig) -> Band:
    """Band of an insertion center; the middle interval is closed."""
    if center_s < cfg.split1_s:
        return Band.BEFORE
    if center_s > cfg.split2_s:
        return Band.AFTER
    return Band.MIDDLE


def _select_rule(band: Band, rng, table: TemplateTable) -> TemplateRule:
    draw = rng.random()
    acc = 0.0
    for rule in table[band]:
        acc += rule.weight
        if draw < acc:
            return rule
    return table[band][-1]


def _normalize_sentence(text: str) -> str:
    text = re.sub(r"\s+", " ", text).strip()
    text = text.rstrip(".").rstrip() + "."
    return text[0].upper() + text[1:]


def render_caption(
    p_a: str, p_b: str, band: Band, rng, table: TemplateTable | None = None
) -> str:
    """Render the composite caption for a mix whose center falls in band.

    One pattern is drawn by weight from the band's rules, the prompt
    placeholders are substituted, then the sentence is normalized: internal
    whitespace collapsed, first character uppercased, exactly one terminal
    period.
    """
    if not p_a.strip() or not p_b.strip():
        raise EmptyPrompt("both component prompts must be non-empty")
    rule = _select_rule(band, rng, table or default_templates())
    sentence = rule.pattern.replace(PLACEHOLDER_A, p_a).replace(PLACEHOLDER_B, p_b)
    return _normalize_sentence(sentence)


def template_distribution_check(
    band: Band,
    draws: int,
    seed: int = DEFAULT_SEED,
    table: TemplateTable | None = None,
) -> dict[str, float]:
    """Empirical pattern frequencies over seeded draws, for table validation."""
    if draws < 1:
        raise ValueError("draws must be at least 1")
    table = table or default_templates()
    rng = derived_rng(seed, "template-distribution", band.value)
    counts: dict[str, int] = {rule.pattern: 0 for rule in table[band]}
    for _ in range(draws):
        counts[_select_rule(band, rng, table).pattern] += 1
    return {pattern: count / draws for pattern, count in counts.items()}
