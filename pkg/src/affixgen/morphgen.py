"""Morphological formation generation and noise control.

Rules mined by the rules module are reapplied to produce candidate related
forms for a word. Generation is vocabulary constrained: rather than expanding
the free-form string set a rule can produce, candidate surfaces are taken
from the collection vocabulary and kept when some rule of sufficient
probability maps the word onto them. Candidates then pass length and
co-occurrence filters that weed out coincidental near neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import CooccurrenceTable, PosLexicon, as_tagger
from .rules import (
    BEGIN,
    DELETE,
    END,
    INSERT,
    MIDDLE,
    Action,
    MedConfig,
    RuleTable,
    TransformationRule,
    banded_distance,
    extract_rule,
    format_actions,
    parse_actions,
)


def apply_rule(w: str, rule: TransformationRule) -> set[str]:
    """All strings reachable by executing the rule's actions left to right.

    Begin actions bind to position 0 and end actions to the final position.
    A middle insertion enumerates every strictly interior insertion point and
    a middle deletion every strictly interior occurrence of its character, so
    the result is a set. Deletions whose character is absent at the required
    position contribute nothing. An empty action list returns ``{w}``.
    """
    current = {w}
    for action in rule.actions:
        nxt: set[str] = set()
        for s in current:
            nxt.update(_apply_action(s, action))
        current = nxt
        if not current:
            break
    return current


def _apply_action(s: str, action: Action) -> set[str]:
    op, pos, ch = action
    if op == INSERT:
        if pos == BEGIN:
            return {ch + s}
        if pos == END:
            return {s + ch}
        return {s[:i] + ch + s[i:] for i in range(1, len(s))}
    if pos == BEGIN:
        return {s[1:]} if s and s[0] == ch else set()
    if pos == END:
        return {s[:-1]} if s and s[-1] == ch else set()
    return {s[:i] + s[i + 1 :] for i in range(1, len(s) - 1) if s[i] == ch}


@dataclass(frozen=True)
class FormationCandidate:
    surface: str
    source: str
    rule: TransformationRule
    prob: float


@dataclass(frozen=True)
class NoiseFilterConfig:
    """Thresholds that separate morphological relatives from lookalikes.

    ``min_len`` maps the edit distance of a formation to the minimum surface
    length it must have; cheap transformations of short words are the main
    source of coincidental matches.
    """

    rule_prob_threshold: float = 1e-4
    min_len: dict[int, int] = field(
        default_factory=lambda: {1: 4, 2: 5, 3: 6}
    )
    context_window: int = 10
    require_context: bool = True

    def __post_init__(self) -> None:
        if self.rule_prob_threshold < 0:
            raise ValueError("rule_prob_threshold must be >= 0")
        for k, length in self.min_len.items():
            if k < 1 or length < 0:
                raise ValueError(f"invalid min_len entry {k}: {length}")


class FormationGenerator:
    """Reusable generator over a fixed vocabulary and rule table.

    The vocabulary signature matrix is built once, so per-word generation
    costs one vectorized filter pass plus banded alignments for survivors.
    """

    def __init__(
        self,
        vocab: Iterable[str],
        rules: RuleTable,
        pos: PosLexicon | Callable[[str], str] | None = None,
        cfg: NoiseFilterConfig | None = None,
        med: MedConfig | None = None,
    ) -> None:
        self.rules = rules
        self.cfg = cfg or NoiseFilterConfig()
        self.med = med or MedConfig(k_max=rules.k_max or 3)
        self.tagger = as_tagger(pos)
        for k in range(1, self.med.k_max + 1):
            if k not in self.cfg.min_len:
                raise ValueError(f"min_len missing an entry for distance {k}")
        self.words = sorted(set(vocab))
        alphabet = sorted({c for word in self.words for c in word})
        self._char_index = {c: i for i, c in enumerate(alphabet)}
        self._sig = np.zeros(
            (len(self.words), max(len(alphabet), 1)), dtype=np.int16
        )
        for row, word in enumerate(self.words):
            for c in word:
                self._sig[row, self._char_index[c]] += 1

    def generate(self, w: str, pos_tag: str | None = None) -> list[FormationCandidate]:
        """Likelihood- and length-filtered formations of ``w`` from the vocabulary."""
        if not self.words:
            return []
        tag = pos_tag if pos_tag is not None else self.tagger(w)
        k = self.med.k_max
        vec = np.zeros(self._sig.shape[1], dtype=np.int16)
        unknown = 0
        for c in w:
            idx = self._char_index.get(c)
            if idx is None:
                unknown += 1
            else:
                vec[idx] += 1
        l1 = np.abs(self._sig - vec).sum(axis=1) + unknown
        out = []
        for row in np.nonzero(l1 <= k)[0]:
            surface = self.words[int(row)]
            if surface == w:
                continue
            d = banded_distance(w, surface, k)
            if d is None or d < 1:
                continue
            if len(surface) < self.cfg.min_len[d]:
                continue
            rule = extract_rule(w, surface, tag, self.med)
            prob = self.rules.prob(rule)
            if prob < self.cfg.rule_prob_threshold:
                continue
            out.append(FormationCandidate(surface, w, rule, prob))
        out.sort(key=lambda c: (-c.prob, c.surface))
        return out


def generate_formations(
    w: str,
    vocab: Iterable[str],
    rules: RuleTable,
    pos: PosLexicon | Callable[[str], str] | None = None,
    cfg: NoiseFilterConfig | None = None,
    med: MedConfig | None = None,
) -> list[FormationCandidate]:
    """One-shot formation generation; see FormationGenerator for repeated use."""
    return FormationGenerator(vocab, rules, pos, cfg, med).generate(w)


def context_filter(
    candidates: Sequence[FormationCandidate],
    anchors: Iterable[str],
    cooc: CooccurrenceTable,
) -> list[FormationCandidate]:
    """Keep formations that co-occur with at least one anchor term.

    Anchors are typically the dictionary translations of the whole query.
    Candidate order is preserved.
    """
    anchor_list = list(anchors)
    return [
        c
        for c in candidates
        if any(cooc.pair_count(c.surface, a) > 0 for a in anchor_list)
    ]


def ngram_split(term: str, n: int = 5) -> list[str]:
    """Distinct contiguous character n-grams in first-occurrence order.

    Terms shorter than ``n`` pass through unchanged.
    """
    if n < 1:
        raise ValueError(f"n-gram size must be >= 1, got {n}")
    if len(term) <= n:
        return [term]
    grams = [term[i : i + n] for i in range(len(term) - n + 1)]
    return list(dict.fromkeys(grams))


def stem_hook(term: str, stemmer: Callable[[str], str] | None = None) -> str:
    """Apply an external stemmer; identity when none is configured."""
    return stemmer(term) if stemmer is not None else term


def load_stem_table(path: str | Path) -> Callable[[str], str]:
    """Build a stemmer from ``term<TAB>stem`` lines, identity for unknowns."""
    table: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise ValueError(f"{path}: malformed stem line {lineno}: {line!r}")
            table[fields[0]] = fields[1]
    return lambda term: table.get(term, term)


def save_formations(
    candidates: Iterable[FormationCandidate], path: str | Path
) -> None:
    """Dump formations as TSV: source, surface, serialized rule, probability."""
    with open(path, "w", encoding="utf-8") as handle:
        for c in candidates:
            rule_text = f"{format_actions(c.rule.actions)}@{c.rule.pos_tag}"
            handle.write(f"{c.source}\t{c.surface}\t{rule_text}\t{c.prob!r}\n")


def load_formations(path: str | Path) -> list[FormationCandidate]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ValueError(f"{path}: malformed formation line {lineno}")
            source, surface, rule_text, prob = fields
            actions_text, _, tag = rule_text.rpartition("@")
            rule = TransformationRule(parse_actions(actions_text), tag)
            out.append(FormationCandidate(surface, source, rule, float(prob)))
    return out
