"""Soft-label filtering: pick candidate tubelets whose dominant label category
agrees with the subject named in the query."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import ConfigurationError, Tubelet, mode_with_first_tiebreak, normalize_text

logger = logging.getLogger(__name__)

MALE = "male"
FEMALE = "female"
NEUTRAL = "neutral"
CATEGORIES = (MALE, FEMALE, NEUTRAL)

DEFAULT_TOKENS = {
    "man": MALE,
    "boy": MALE,
    "woman": FEMALE,
    "girl": FEMALE,
    "lady": FEMALE,
    "person": NEUTRAL,
    "child": NEUTRAL,
    "kid": NEUTRAL,
}


@dataclass(frozen=True)
class CategoryLexicon:
    """Token -> category map; unknown tokens fall back to ``default``."""

    tokens: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_TOKENS))
    default: str = NEUTRAL

    def __post_init__(self):
        bad = {k: v for k, v in self.tokens.items() if v not in CATEGORIES}
        if bad or self.default not in CATEGORIES:
            raise ConfigurationError(f"unknown lexicon categories: {bad or self.default}")
        object.__setattr__(self, "tokens", {k.lower(): v for k, v in self.tokens.items()})

    def __getitem__(self, token: str) -> str:
        return self.tokens.get(token.lower(), self.default)

    def __hash__(self):
        return hash((tuple(sorted(self.tokens.items())), self.default))

    @classmethod
    def from_json(cls, path: str | Path) -> CategoryLexicon:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: lexicon must be a JSON object of token -> category")
        return cls(tokens=data)


DEFAULT_LEXICON = CategoryLexicon()


def specific_categories(tokens: Iterable[str], lex: CategoryLexicon) -> set[str]:
    return {lex[t] for t in tokens} - {NEUTRAL}


def _categorize(tokens: list[str], lex: CategoryLexicon) -> str:
    cats = specific_categories(tokens, lex)
    return cats.pop() if len(cats) == 1 else NEUTRAL


def normalize_label(raw: str, lex: CategoryLexicon = DEFAULT_LEXICON) -> str:
    """Map a detector soft label such as ``"person woman"`` to a category.

    A single specific category wins over generic tokens; two different
    specific categories (``"man woman"``) collapse to neutral.
    """
    return _categorize(normalize_text(raw), lex)


def subject_category(subject_phrase: str, lex: CategoryLexicon = DEFAULT_LEXICON) -> str:
    return _categorize(normalize_text(subject_phrase), lex)


def tubelet_type(t: Tubelet, lex: CategoryLexicon = DEFAULT_LEXICON) -> str:
    return mode_with_first_tiebreak([normalize_label(d.label, lex) for d in t.detections])


def is_conflicting(t: Tubelet, lex: CategoryLexicon = DEFAULT_LEXICON) -> bool:
    """True when the tubelet's labels span two or more specific categories."""
    tokens = {tok for d in t.detections for tok in d.label.split()}
    return len(specific_categories(tokens, lex)) >= 2


def slf_filter(
    tubelets: Sequence[Tubelet],
    subject_phrase: str,
    lex: CategoryLexicon = DEFAULT_LEXICON,
    variability_min: float = 0.3,
) -> list[Tubelet]:
    """Keep tubelets compatible with the query subject.

    Neutral subjects keep everything.  Otherwise a tubelet is kept if its
    type matches the subject, its type is neutral, or its soft labels switch
    on at least ``variability_min`` of its detections.
    """
    # local import: denoising depends on this module for the lexicon
    from .denoising import switching_fraction

    subject = subject_category(subject_phrase, lex)
    if subject == NEUTRAL:
        kept = list(tubelets)
    else:
        kept = [
            t
            for t in tubelets
            if tubelet_type(t, lex) in (subject, NEUTRAL)
            or switching_fraction(t) >= variability_min
        ]
    if tubelets and not kept:
        logger.warning("soft-label filter removed every tubelet for subject %r", subject_phrase)
    return kept
