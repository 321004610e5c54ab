"""Definition embedding and sense-definition training-pair construction.

Definitions are embedded as the mean of their word vectors; pairs are then
built either definition-to-sense (each definition joins its nearest sense)
or sense-to-definition (each sense joins its nearest definition).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingTable, SenseTable, cosine
from .errors import PairsFormatError, UnrepresentableDefinitionError
from .lexicon import Lexicon, WordEntry
from .textprep import StopwordSet

log = logging.getLogger(__name__)


class MatchMode(enum.Enum):
    """Direction of the sense-definition assignment."""

    D2S = "d2s"
    S2D = "s2d"


@dataclass(frozen=True, eq=False)
class SenseDefPair:
    """A training example: one sense vector paired with one definition."""

    headword: str
    sense_index: int
    sense_vector: np.ndarray
    definition: tuple[str, ...]

    def __post_init__(self):
        if self.sense_index < 0:
            raise ValueError("sense_index must be nonnegative")
        if not self.definition:
            raise ValueError("definition must be nonempty")


@dataclass(frozen=True)
class MatchSummary:
    """Counts reported by a pair-construction run."""

    entries_matched: int
    entries_skipped: int
    entries_empty: int
    pairs_built: int
    pairs_filtered: int = 0


def embed_definition(
    definition: tuple[str, ...] | list[str],
    table: EmbeddingTable,
    stops: StopwordSet,
) -> np.ndarray:
    """Mean vector of the definition's in-vocabulary, non-stopword tokens.

    Falls back to the mean over all in-vocabulary tokens when every covered
    token is a stopword. Raises UnrepresentableDefinitionError when no token
    is covered at all.
    """
    covered = [t for t in definition if t in table]
    if not covered:
        raise UnrepresentableDefinitionError(
            f"no token of {list(definition)!r} is in the embedding vocabulary")
    content = [t for t in covered if t not in stops]
    chosen = content if content else covered
    return np.mean([table.vector(t) for t in chosen], axis=0)


def match_d2s(
    entry: WordEntry,
    senses: list[tuple[np.ndarray, float]],
    table: EmbeddingTable,
    stops: StopwordSet,
) -> list[SenseDefPair]:
    """One pair per representable definition, joined to its nearest sense.

    Cosine ties go to the lowest sense index. Definitions with no covered
    token are skipped with a warning; zero representable definitions yield
    an empty list.
    """
    pairs = []
    for definition in entry.definitions:
        try:
            emb = embed_definition(definition, table, stops)
        except UnrepresentableDefinitionError:
            log.warning("%s: definition %r not representable, skipped",
                        entry.headword, " ".join(definition))
            continue
        sims = np.array([cosine(emb, vec) for vec, _prior in senses])
        best = int(np.argmax(sims))
        pairs.append(SenseDefPair(entry.headword, best, senses[best][0], definition))
    if not pairs:
        log.warning("%s: no representable definitions", entry.headword)
    return pairs


def match_s2d(
    entry: WordEntry,
    senses: list[tuple[np.ndarray, float]],
    table: EmbeddingTable,
    stops: StopwordSet,
) -> list[SenseDefPair]:
    """One pair per sense, joined to its nearest representable definition.

    Cosine ties go to the first definition in entry order.
    """
    embs, kept = [], []
    for definition in entry.definitions:
        try:
            embs.append(embed_definition(definition, table, stops))
            kept.append(definition)
        except UnrepresentableDefinitionError:
            log.warning("%s: definition %r not representable, skipped",
                        entry.headword, " ".join(definition))
    if not kept:
        log.warning("%s: no representable definitions", entry.headword)
        return []
    pairs = []
    for k, (vec, _prior) in enumerate(senses):
        sims = np.array([cosine(vec, emb) for emb in embs])
        best = int(np.argmax(sims))
        pairs.append(SenseDefPair(entry.headword, k, vec, kept[best]))
    return pairs


def build_training_pairs(
    split: Lexicon,
    senses: SenseTable,
    table: EmbeddingTable | None,
    stops: StopwordSet,
    mode: MatchMode,
    min_similarity: float | None = None,
) -> tuple[list[SenseDefPair], MatchSummary]:
    """Match every entry of `split` against its retained senses.

    Definition embeddings use `table` when given, else each word's dominant
    sense vector. Entries whose headword has no sense vector are skipped and
    counted. `min_similarity`, when set, drops pairs whose winning cosine
    falls below it (off by default). Pairs come back sorted by headword,
    sense index, then definition order.
    """
    if table is None:
        table = senses.dominant_table()
    match = match_d2s if mode is MatchMode.D2S else match_s2d
    pairs: list[SenseDefPair] = []
    matched = skipped = empty = filtered = 0
    for headword in split.headwords():
        if headword not in senses:
            skipped += 1
            continue
        retained = [(vec, prior) for _k, vec, prior in senses.senses(headword)]
        entry_pairs = match(split.entries[headword], retained, table, stops)
        if min_similarity is not None:
            before = len(entry_pairs)
            entry_pairs = [
                p for p in entry_pairs
                if cosine(embed_definition(p.definition, table, stops),
                          p.sense_vector) >= min_similarity
            ]
            filtered += before - len(entry_pairs)
        if not entry_pairs:
            empty += 1
            continue
        matched += 1
        # Stable sort: D2S pairs arrive in definition order, so equal sense
        # indices keep that order.
        entry_pairs.sort(key=lambda p: p.sense_index)
        pairs.extend(entry_pairs)
    if skipped:
        log.warning("%d entries had no sense vector and were skipped", skipped)
    summary = MatchSummary(matched, skipped, empty, len(pairs), filtered)
    return pairs, summary


def build_base_pairs(
    split: Lexicon,
    table: EmbeddingTable,
) -> tuple[list[SenseDefPair], MatchSummary]:
    """Single-sense pairs: every definition conditioned on its headword vector.

    Entries whose headword lacks a vector are skipped and counted. Pairs come
    back sorted by headword, then definition order, with sense_index 0.
    """
    pairs: list[SenseDefPair] = []
    matched = skipped = 0
    for headword in split.headwords():
        if headword not in table:
            skipped += 1
            continue
        vec = table.vector(headword)
        for definition in split.entries[headword].definitions:
            pairs.append(SenseDefPair(headword, 0, vec, definition))
        matched += 1
    if skipped:
        log.warning("%d entries had no word vector and were skipped", skipped)
    summary = MatchSummary(matched, skipped, 0, len(pairs))
    return pairs, summary


def save_pairs(pairs: list[SenseDefPair], path: str | Path) -> None:
    """Write pairs as TSV: headword, sense index, space-joined definition."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("#pairs v1\n")
        for p in pairs:
            f.write(f"{p.headword}\t{p.sense_index}\t{' '.join(p.definition)}\n")


def load_pairs(
    path: str | Path,
    source: SenseTable | EmbeddingTable,
) -> list[SenseDefPair]:
    """Read a pairs TSV, resolving condition vectors from `source`.

    With a SenseTable the sense index selects one of the headword's retained
    senses; with an EmbeddingTable the index must be 0 and the headword's own
    vector is used. Malformed lines raise PairsFormatError with their number.
    """
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise PairsFormatError(f"{path}:{lineno}: expected 3 tab-separated fields")
            headword, index_text, def_text = parts
            try:
                sense_index = int(index_text)
            except ValueError:
                raise PairsFormatError(
                    f"{path}:{lineno}: sense index {index_text!r} is not an integer")
            definition = tuple(def_text.split())
            if not headword or sense_index < 0 or not definition:
                raise PairsFormatError(f"{path}:{lineno}: empty field")
            if isinstance(source, SenseTable):
                retained = source.senses(headword)
                if sense_index >= len(retained):
                    raise PairsFormatError(
                        f"{path}:{lineno}: sense index {sense_index} out of range "
                        f"({len(retained)} retained senses for {headword!r})")
                vec = retained[sense_index][1]
            else:
                if sense_index != 0:
                    raise PairsFormatError(
                        f"{path}:{lineno}: sense index must be 0 for a single-sense table")
                vec = source.vector(headword)
            pairs.append(SenseDefPair(headword, sense_index, vec, definition))
    return pairs
