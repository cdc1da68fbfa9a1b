"""Transformation rules between morphologically related word forms.

A rule is the ordered list of single-character edit actions that turns one
word into another along a minimum-cost alignment that allows insertions and
deletions but no substitutions, together with the part-of-speech tag of the
source word. Under unit costs this distance equals
``len(w) + len(w2) - 2 * lcs(w, w2)``.

Each action records its operation, the character involved, and a coarse
position. Positions are assigned while walking the alignment left to right:
an action is tagged ``begin`` when it touches index 0 of the partially
transformed string, ``end`` when it touches the final position, and
``middle`` otherwise. Anchoring positions to the partially transformed
string (rather than to static source offsets) is what makes a rule
reapplicable: executing the actions in order on the source word always
reproduces the target among the generated strings.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .corpus import PosLexicon, UNKNOWN_TAG, as_tagger

INSERT = "i"
DELETE = "d"
BEGIN = "b"
MIDDLE = "m"
END = "e"

_OPS = {INSERT, DELETE}
_POSITIONS = {BEGIN, MIDDLE, END}


class Action(NamedTuple):
    op: str
    pos: str
    ch: str


@dataclass(frozen=True)
class TransformationRule:
    actions: tuple[Action, ...]
    pos_tag: str = UNKNOWN_TAG

    def __str__(self) -> str:
        return f"{format_actions(self.actions)}@{self.pos_tag}"


@dataclass(frozen=True)
class MedConfig:
    """Edit-distance settings.

    Substitutions are never allowed; ``cost_substitute`` is kept only to make
    that explicit. Unit insertion and deletion costs are required by the
    banded pruning used during mining.
    """

    cost_insert: int = 1
    cost_delete: int = 1
    cost_substitute: float = math.inf
    k_max: int = 3

    def __post_init__(self) -> None:
        if self.cost_insert <= 0 or self.cost_delete <= 0:
            raise ValueError("edit costs must be positive")
        if self.cost_substitute <= self.cost_insert + self.cost_delete:
            raise ValueError("substitution must cost more than insert plus delete")
        if self.k_max < 0:
            raise ValueError(f"k_max must be >= 0, got {self.k_max}")

    @property
    def unit_costs(self) -> bool:
        return self.cost_insert == 1 and self.cost_delete == 1


def indel_distance(w: str, w2: str, config: MedConfig | None = None) -> int:
    """Minimum edit distance using insertions and deletions only."""
    ci = config.cost_insert if config else 1
    cd = config.cost_delete if config else 1
    n, m = len(w), len(w2)
    if n == 0 or m == 0:
        return m * ci + n * cd
    prev = [j * ci for j in range(m + 1)]
    for i in range(1, n + 1):
        cur = [i * cd] + [0] * m
        wc = w[i - 1]
        for j in range(1, m + 1):
            best = min(prev[j] + cd, cur[j - 1] + ci)
            if wc == w2[j - 1] and prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = best
        prev = cur
    return prev[m]


def extract_rule(
    w: str,
    w2: str,
    pos_tag: str = UNKNOWN_TAG,
    config: MedConfig | None = None,
) -> TransformationRule:
    """Extract the canonical transformation rule turning ``w`` into ``w2``.

    The full alignment table is built, then a single optimal path is chosen
    by walking back from the terminal cell preferring matches, then
    deletions from the source, then insertions. Actions are emitted in
    left-to-right alignment order.
    """
    ci = config.cost_insert if config else 1
    cd = config.cost_delete if config else 1
    n, m = len(w), len(w2)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(1, m + 1):
        dist[0][j] = j * ci
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        row[0] = i * cd
        wc = w[i - 1]
        for j in range(1, m + 1):
            best = min(prev[j] + cd, row[j - 1] + ci)
            if wc == w2[j - 1] and prev[j - 1] < best:
                best = prev[j - 1]
            row[j] = best
    return TransformationRule(_traceback(w, w2, dist, ci, cd), pos_tag)


def _traceback(
    w: str, w2: str, dist: list[list[int]], ci: int, cd: int
) -> tuple[Action, ...]:
    n, m = len(w), len(w2)
    moves: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        if (
            i > 0
            and j > 0
            and w[i - 1] == w2[j - 1]
            and dist[i - 1][j - 1] == dist[i][j]
        ):
            moves.append("match")
            i -= 1
            j -= 1
        elif i > 0 and dist[i - 1][j] + cd == dist[i][j]:
            moves.append("delete")
            i -= 1
        else:
            moves.append("insert")
            j -= 1
    moves.reverse()

    # Forward pass: positions are judged against the evolving string
    # w2[:j] + w[i:], the state after the actions emitted so far.
    actions: list[Action] = []
    i = j = 0
    for move in moves:
        if move == "match":
            i += 1
            j += 1
        elif move == "insert":
            if i == n:
                pos = END
            elif j == 0:
                pos = BEGIN
            else:
                pos = MIDDLE
            actions.append(Action(INSERT, pos, w2[j]))
            j += 1
        else:
            if j == 0:
                pos = BEGIN
            elif i == n - 1:
                pos = END
            else:
                pos = MIDDLE
            actions.append(Action(DELETE, pos, w[i]))
            i += 1
    return tuple(actions)


def invert_rule(rule: TransformationRule, pos_tag: str | None = None) -> TransformationRule:
    """Undo a rule: swap insert and delete and reverse the action order.

    Position labels carry over unchanged; an action that touched index 0 or
    the final position of the partially transformed string is undone at the
    same place. Applying the inverted rule to any output of the original
    yields a set containing the original word.
    """
    flipped = tuple(
        Action(DELETE if a.op == INSERT else INSERT, a.pos, a.ch)
        for a in reversed(rule.actions)
    )
    return TransformationRule(flipped, rule.pos_tag if pos_tag is None else pos_tag)


def banded_distance(w: str, w2: str, k: int) -> int | None:
    """Indel distance if it does not exceed ``k``, else None.

    Only alignment cells within ``k`` of the diagonal are evaluated, and the
    scan aborts as soon as a whole row exceeds the budget. Unit costs only.
    """
    n, m = len(w), len(w2)
    if abs(n - m) > k:
        return None
    if n == 0 or m == 0:
        d = n + m
        return d if d <= k else None
    cap = k + 1
    width = 2 * k + 1
    prev = [cap] * width
    for j in range(min(m, k) + 1):
        prev[j + k] = j
    for i in range(1, n + 1):
        cur = [cap] * width
        wc = w[i - 1]
        lo = max(0, i - k)
        hi = min(m, i + k)
        row_min = cap
        for j in range(lo, hi + 1):
            d = j - i + k
            if j == 0:
                c = i if i < cap else cap
            else:
                c = prev[d + 1] + 1 if d + 1 < width else cap
                if d >= 1 and cur[d - 1] + 1 < c:
                    c = cur[d - 1] + 1
                if wc == w2[j - 1] and prev[d] < c:
                    c = prev[d]
                if c > cap:
                    c = cap
            cur[d] = c
            if c < row_min:
                row_min = c
        if row_min >= cap:
            return None
        prev = cur
    final = prev[m - n + k]
    return final if final <= k else None


@dataclass
class RuleTable:
    """Mined rules with type-frequency counts and maximum-likelihood probs."""

    counts: dict[TransformationRule, int]
    probs: dict[TransformationRule, float]
    k_max: int
    total_count: int

    @classmethod
    def empty(cls, k_max: int) -> "RuleTable":
        return cls({}, {}, k_max, 0)

    def __len__(self) -> int:
        return len(self.counts)

    def __contains__(self, rule: TransformationRule) -> bool:
        return rule in self.counts

    def prob(self, rule: TransformationRule) -> float:
        return self.probs.get(rule, 0.0)

    def ranked(self) -> list[tuple[TransformationRule, int, float]]:
        """Rules sorted by descending count, then serialized form."""
        order = sorted(
            self.counts,
            key=lambda r: (-self.counts[r], format_actions(r.actions), r.pos_tag),
        )
        return [(r, self.counts[r], self.probs[r]) for r in order]

    def top(self, n: int) -> list[TransformationRule]:
        return [r for r, _, _ in self.ranked()[:n]]


def score_rules(counts: dict[TransformationRule, int], k_max: int) -> RuleTable:
    """Turn raw rule counts into a probability table. Empty counts are an error."""
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("cannot score an empty rule count table")
    probs = {rule: count / total for rule, count in counts.items()}
    return RuleTable(dict(counts), probs, k_max, total)


def mine_rules(
    vocab: Iterable[str],
    pos: PosLexicon | Callable[[str], str] | None = None,
    config: MedConfig | None = None,
) -> RuleTable:
    """Mine transformation rules from every vocabulary pair within ``k_max``.

    Every ordered pair of distinct words whose indel distance lies in
    ``[1, k_max]`` contributes one count to its extracted rule (type
    frequency). Pairs are pruned with a character-count signature bound
    before the banded distance check; neither filter can drop a pair the
    exhaustive scan would keep.
    """
    config = config or MedConfig()
    if not config.unit_costs:
        raise ValueError("rule mining requires unit insertion and deletion costs")
    words = sorted(set(vocab))
    tagger = as_tagger(pos)
    k = config.k_max
    counts: Counter[TransformationRule] = Counter()
    if len(words) < 2 or k < 1:
        return RuleTable.empty(k)

    alphabet = sorted({c for word in words for c in word})
    char_index = {c: i for i, c in enumerate(alphabet)}
    sig = np.zeros((len(words), max(len(alphabet), 1)), dtype=np.int16)
    for row, word in enumerate(words):
        for c in word:
            sig[row, char_index[c]] += 1

    for row in range(len(words) - 1):
        # L1 distance between character-count signatures lower-bounds the
        # indel distance, so this keeps every pair within k.
        l1 = np.abs(sig[row + 1 :] - sig[row]).sum(axis=1)
        for offset in np.nonzero(l1 <= k)[0]:
            a = words[row]
            b = words[row + 1 + int(offset)]
            d = banded_distance(a, b, k)
            if d is None or d < 1:
                continue
            counts[extract_rule(a, b, tagger(a), config)] += 1
            counts[extract_rule(b, a, tagger(b), config)] += 1

    if not counts:
        return RuleTable.empty(k)
    return score_rules(counts, k)


def format_actions(actions: Iterable[Action]) -> str:
    parts = []
    for action in actions:
        if action.ch in {":", "|", "\t", "\n"} or len(action.ch) != 1:
            raise ValueError(f"action character not serializable: {action.ch!r}")
        parts.append(f"{action.op}:{action.pos}:{action.ch}")
    return "|".join(parts)


def parse_actions(text: str) -> tuple[Action, ...]:
    if not text:
        return ()
    actions = []
    for part in text.split("|"):
        fields = part.split(":")
        if len(fields) != 3:
            raise ValueError(f"malformed action: {part!r}")
        op, pos, ch = fields
        if op not in _OPS or pos not in _POSITIONS or len(ch) != 1:
            raise ValueError(f"malformed action: {part!r}")
        actions.append(Action(op, pos, ch))
    return tuple(actions)


def save_rules(table: RuleTable, path: str | Path) -> None:
    """Write the rule table as TSV: actions, POS tag, count, probability."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"#k_max\t{table.k_max}\n")
        for rule, count, prob in table.ranked():
            handle.write(
                f"{format_actions(rule.actions)}\t{rule.pos_tag}\t{count}\t{prob!r}\n"
            )


def load_rules(path: str | Path) -> RuleTable:
    counts: dict[TransformationRule, int] = {}
    stored_probs: dict[TransformationRule, float] = {}
    k_max = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#k_max\t"):
                k_max = int(line.split("\t")[1])
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ValueError(f"{path}: malformed rule line {lineno}: {line!r}")
            rule = TransformationRule(parse_actions(fields[0]), fields[1])
            if rule in counts:
                raise ValueError(f"{path}: duplicate rule on line {lineno}")
            counts[rule] = int(fields[2])
            stored_probs[rule] = float(fields[3])
    if not counts:
        raise ValueError(f"{path}: no rules found")
    if not k_max:
        k_max = max(len(r.actions) for r in counts)
    total = sum(counts.values())
    for rule, prob in stored_probs.items():
        if not math.isclose(prob, counts[rule] / total, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"{path}: stored probability inconsistent for {rule}")
    return RuleTable(counts, stored_probs, k_max, total)
