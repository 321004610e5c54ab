"""Tokenization, vocabulary construction, and stopword filtering.

Shared by corpus training, lexicon ingestion, and metric computation, so
everything here is deterministic and pure.
"""

from __future__ import annotations

import functools
import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ConfigError

UNK = "<unk>"
BOS = "<bos>"
EOS = "<eos>"
PAD = "<pad>"
SPECIALS = (UNK, BOS, EOS, PAD)

UNK_ID, BOS_ID, EOS_ID, PAD_ID = 0, 1, 2, 3

# Anything that is neither a word character nor whitespace counts as
# punctuation; underscore is included explicitly because \w covers it.
_PUNCT_RE = re.compile(r"[^\w\s]|_", re.UNICODE)


@dataclass(frozen=True)
class TokenizerProfile:
    """Deterministic tokenization rules for one language.

    `extra_rules` are regex (pattern, replacement) pairs applied in order
    before anything else; they carry language-specific quirks.
    """

    language_tag: str = "en"
    lowercase: bool = True
    punctuation_policy: str = "split_off"  # or "drop"
    extra_rules: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.punctuation_policy not in ("split_off", "drop"):
            raise ConfigError(
                f"unknown punctuation_policy: {self.punctuation_policy!r}"
            )


@functools.lru_cache(maxsize=32)
def _compiled_rules(rules: tuple[tuple[str, str], ...]):
    return [(re.compile(pat), repl) for pat, repl in rules]


def tokenize(text: str, profile: TokenizerProfile) -> list[str]:
    """Split `text` into tokens according to `profile`.

    Idempotent on its own space-joined output; empty input gives [].
    """
    for pattern, repl in _compiled_rules(profile.extra_rules):
        text = pattern.sub(repl, text)
    if profile.lowercase:
        text = text.lower()
    if profile.punctuation_policy == "split_off":
        text = _PUNCT_RE.sub(lambda m: f" {m.group(0)} ", text)
    else:
        text = _PUNCT_RE.sub(" ", text)
    return text.split()


class Vocabulary:
    """Token <-> id table with counts and reserved special tokens.

    Ids 0-3 are fixed to UNK/BOS/EOS/PAD; real tokens start at 4 and are
    assigned in (count desc, token asc) order so builds are deterministic.
    Unknown lookups resolve to UNK.
    """

    def __init__(self, counts: dict[str, int], min_count: int = 1):
        if min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {min_count}")
        self.min_count = min_count
        self._id_to_token = list(SPECIALS)
        self._token_to_id = {t: i for i, t in enumerate(SPECIALS)}
        self._counts = {t: 0 for t in SPECIALS}
        for token, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            self._token_to_id[token] = len(self._id_to_token)
            self._id_to_token.append(token)
            self._counts[token] = count

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        return self._id_to_token[token_id]

    def count(self, token: str) -> int:
        return self._counts.get(token, 0)

    def ids(self, tokens: Iterable[str]) -> list[int]:
        get = self._token_to_id.get
        return [get(t, UNK_ID) for t in tokens]

    def words(self) -> list[str]:
        """All tokens in id order; specials occupy ids 0-3."""
        return list(self._id_to_token)

    def digest(self) -> str:
        """Content hash; stable across save/load round-trips."""
        h = hashlib.sha256()
        for i, token in enumerate(self._id_to_token):
            h.update(f"{token}\t{i}\t{self._counts[token]}\n".encode("utf-8"))
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("#vocab v1\n")
            for i, token in enumerate(self._id_to_token):
                f.write(f"{token}\t{i}\t{self._counts[token]}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            if header != "#vocab v1":
                raise ConfigError(f"{path}: not a vocabulary file (header {header!r})")
            rows = []
            for lineno, line in enumerate(f, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ConfigError(f"{path}:{lineno}: expected 3 tab-separated fields")
                rows.append((parts[0], int(parts[1]), int(parts[2])))
        rows.sort(key=lambda r: r[1])
        expected_ids = list(range(len(rows)))
        if [r[1] for r in rows] != expected_ids:
            raise ConfigError(f"{path}: vocabulary ids are not contiguous from 0")
        if tuple(r[0] for r in rows[:4]) != SPECIALS:
            raise ConfigError(f"{path}: first four entries must be the special tokens")
        vocab = cls.__new__(cls)
        vocab.min_count = 1
        vocab._id_to_token = [r[0] for r in rows]
        vocab._token_to_id = {r[0]: r[1] for r in rows}
        vocab._counts = {r[0]: r[2] for r in rows}
        return vocab


def count_tokens(tokens: Iterable[str]) -> Counter:
    """Count occurrences; shard counts merge associatively with `+`."""
    counts = Counter(tokens)
    for special in SPECIALS:
        counts.pop(special, None)
    return counts


def build_vocab(
    tokens: Iterable[str],
    min_count: int = 1,
    max_size: int | None = None,
) -> Vocabulary:
    """Build a Vocabulary from a token stream.

    Tokens with count >= min_count are kept, most frequent first, ties
    broken lexicographically; `max_size` bounds the non-special entries.
    """
    return build_vocab_from_counts(count_tokens(tokens), min_count, max_size)


def build_vocab_from_counts(
    counts: Counter,
    min_count: int = 1,
    max_size: int | None = None,
) -> Vocabulary:
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    kept = {t: c for t, c in counts.items() if c >= min_count}
    if max_size is not None:
        ranked = sorted(kept.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
        kept = dict(ranked)
    return Vocabulary(kept, min_count=min_count)


@dataclass(frozen=True)
class StopwordSet:
    """Exact-membership stopword list for one language."""

    language_tag: str
    tokens: frozenset[str]

    def __contains__(self, token: str) -> bool:
        return token in self.tokens

    @classmethod
    def empty(cls, language_tag: str = "") -> "StopwordSet":
        return cls(language_tag, frozenset())

    @classmethod
    def from_file(cls, path: str | Path, language_tag: str = "") -> "StopwordSet":
        """One token per line; `#` starts a comment line."""
        tokens = set()
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                tokens.add(line)
        return cls(language_tag or Path(path).stem, frozenset(tokens))

    @classmethod
    def default(cls, language_tag: str) -> "StopwordSet":
        """Small shipped list for `language_tag`; empty set if none exists."""
        package = resources.files("defmod.data.stopwords")
        candidate = package / f"{language_tag}.txt"
        if not candidate.is_file():
            return cls.empty(language_tag)
        tokens = set()
        for line in candidate.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                tokens.add(line)
        return cls(language_tag, frozenset(tokens))


def filter_stopwords(tokens: Iterable[str], stops: StopwordSet) -> list[str]:
    """Drop stopwords, preserving the order of everything else."""
    return [t for t in tokens if t not in stops.tokens]


def iter_corpus_tokens(path: str | Path, profile: TokenizerProfile) -> Iterator[str]:
    """Stream tokens from a text file, one line at a time."""
    with open(path, encoding="utf-8") as f:
        for line in f:
            yield from tokenize(line, profile)
