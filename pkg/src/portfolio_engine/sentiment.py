"""Lexicon sentiment scoring written as a pure map and an associative reduce.

``map_document`` turns one document into integer (pos, neg) tallies and
``reduce_counts`` adds tallies for the same firm. Integer addition is exactly
associative and commutative, so documents can be sharded across any number of
workers and merged in any tree shape with identical results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .core_data import Document
from .errors import FirmMismatch, LexiconError, MissingFile


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, int]

    def __post_init__(self):
        clean = {}
        for token, pol in self.entries.items():
            if not token or token != token.lower() or tokenize(token) != [token]:
                raise LexiconError(f"invalid lexicon token {token!r}")
            if pol not in (1, -1):
                raise LexiconError(f"polarity of {token!r} must be +1 or -1, got {pol!r}")
            clean[token] = int(pol)
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SentimentCounts:
    firm_id: str
    pos: int = 0
    neg: int = 0

    def __post_init__(self):
        if self.pos < 0 or self.neg < 0:
            raise ValueError("counts must be nonnegative")


@dataclass(frozen=True)
class SentimentScore:
    firm_id: str
    score: float
    total_tokens_matched: int


def _parse_lexicon(lines: Iterable[str], source: str) -> Lexicon:
    entries: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2 or parts[1].strip() not in ("+1", "-1"):
            raise LexiconError(f"{source}:{lineno}: expected 'word,+1' or 'word,-1'")
        word, pol = parts[0].strip(), int(parts[1].strip())
        if entries.get(word, pol) != pol:
            raise LexiconError(f"{source}:{lineno}: {word!r} listed with both polarities")
        entries[word] = pol
    return Lexicon(entries)


def load_lexicon(path) -> Lexicon:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    with open(path, encoding="utf-8") as fh:
        return _parse_lexicon(fh, str(path))


def default_lexicon() -> Lexicon:
    text = resources.files("portfolio_engine").joinpath("data/lexicon.txt").read_text(encoding="utf-8")
    return _parse_lexicon(text.splitlines(), "default lexicon")


def tokenize(text: str) -> list[str]:
    """Lowercase, then split on every non-alphanumeric codepoint."""
    tokens, current = [], []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def map_document(doc: Document, lexicon: Lexicon) -> SentimentCounts:
    pos = neg = 0
    entries = lexicon.entries
    for tok in tokenize(doc.text):
        pol = entries.get(tok)
        if pol == 1:
            pos += 1
        elif pol == -1:
            neg += 1
    return SentimentCounts(doc.firm_id, pos, neg)


def reduce_counts(a: SentimentCounts, b: SentimentCounts) -> SentimentCounts:
    if a.firm_id != b.firm_id:
        raise FirmMismatch(f"cannot reduce counts of {a.firm_id!r} with {b.firm_id!r}")
    return SentimentCounts(a.firm_id, a.pos + b.pos, a.neg + b.neg)


def score_firm(counts: SentimentCounts) -> SentimentScore:
    total = counts.pos + counts.neg
    score = (counts.pos - counts.neg) / total if total > 0 else 0.0
    return SentimentScore(counts.firm_id, score, total)


def positive_firms(scores: Iterable[SentimentScore]) -> list[str]:
    return sorted(s.firm_id for s in scores if s.score > 0)


def _map_shard(docs: Sequence[Document], lexicon: Lexicon, keep) -> dict[str, SentimentCounts]:
    partial: dict[str, SentimentCounts] = {}
    for doc in docs:
        if keep is not None and doc.firm_id not in keep:
            continue
        c = map_document(doc, lexicon)
        partial[c.firm_id] = reduce_counts(partial[c.firm_id], c) if c.firm_id in partial else c
    return partial


def _shards(docs: Sequence[Document], n: int) -> list[Sequence[Document]]:
    size = -(-len(docs) // n) if docs else 1
    return [docs[i:i + size] for i in range(0, len(docs), size)] or [docs]


def count_corpus(
    documents: Sequence[Document],
    lexicon: Lexicon,
    firm_ids: Iterable[str] | None = None,
    workers: int = 1,
) -> list[SentimentCounts]:
    """Map every document and reduce per firm.

    When ``firm_ids`` is given only those firms are counted, and firms with
    no documents get zero counts. Output is sorted by firm_id.
    """
    keep = None if firm_ids is None else frozenset(firm_ids)
    documents = list(documents)
    shards = _shards(documents, max(1, workers))
    if workers > 1 and len(shards) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda s: _map_shard(s, lexicon, keep), shards))
    else:
        partials = [_map_shard(s, lexicon, keep) for s in shards]

    firms = set(keep) if keep is not None else set()
    for p in partials:
        firms.update(p)
    out = []
    for firm in sorted(firms):
        parts = [p[firm] for p in partials if firm in p]
        out.append(reduce(reduce_counts, parts, SentimentCounts(firm)))
    return out
