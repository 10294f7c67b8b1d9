"""L1-train / L2-test vocabulary-overlap statistics and word/entity partitions.

Overlap for NER is counted over word *tokens* (frequent entities weigh more);
overlap for the title task is counted over word *types*, mirroring how each
is consumed downstream. The common/unique partitions computed here drive the
entity-swap and context-word perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .corpus import Corpus, corpus_chunks, is_content_word, is_punctuation
from .errors import DataError

WORD_TOKEN_LIMIT = 128  # tokens of each section text that count toward title overlap


@dataclass(frozen=True)
class OverlapReport:
    shared_count: int
    total_count: int

    def __post_init__(self):
        if self.total_count <= 0:
            raise ValueError("total_count must be positive")
        if not 0 <= self.shared_count <= self.total_count:
            raise ValueError("shared_count out of range")

    @property
    def percent(self) -> float:
        return self.shared_count / self.total_count * 100.0


@dataclass(frozen=True)
class WordPartition:
    common: frozenset[str]  # in both L1-train and L2-test
    unique: frozenset[str]  # in L2-test only


@dataclass(frozen=True)
class EntityPartition:
    common_entities: frozenset[tuple[str, tuple[str, ...]]]
    unique_by_label: dict[str, frozenset[tuple[str, ...]]]


def ner_word_overlap(l1_train: Corpus, l2_test: Corpus,
                     all_token_denominator: bool = False) -> OverlapReport:
    """Share of L2-test entity tokens whose (lowercased text, tag) also occurs in L1-train.

    Both numerator and denominator count non-Outside tokens; pass
    all_token_denominator=True to divide by every L2-test token instead
    (the alternative reading, kept for comparison).
    """
    l1_pairs = {(t.text.lower(), str(t.tag)) for t in l1_train.tokens() if not t.tag.is_outside()}
    shared = 0
    entity_tokens = 0
    all_tokens = 0
    for token in l2_test.tokens():
        all_tokens += 1
        if token.tag.is_outside():
            continue
        entity_tokens += 1
        if (token.text.lower(), str(token.tag)) in l1_pairs:
            shared += 1
    if entity_tokens == 0:
        raise DataError("L2-test corpus has no entity tokens to overlap")
    return OverlapReport(shared, all_tokens if all_token_denominator else entity_tokens)


def whitespace_tokenizer(text: str, index: int = 0) -> list[str]:
    """Default segmenter: whitespace words, truncated to the first 128."""
    return text.split()[:WORD_TOKEN_LIMIT]


def sidecar_tokenizer(boundaries: Sequence[int]) -> Callable[[str, int], list[str]]:
    """Segmenter replaying an externally computed model tokenization.

    `boundaries[i]` is the number of leading whitespace words of text i that
    fit in the first 128 model tokens (see the token-count sidecar format).
    """
    def tokenize(text: str, index: int) -> list[str]:
        if index >= len(boundaries):
            raise DataError(f"token sidecar has no entry for text {index}")
        return text.split()[:boundaries[index]]
    return tokenize


def load_token_sidecar(path) -> list[tuple[int, int]]:
    """Read "<token count><TAB><128-token word boundary>" lines."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 2:
                raise DataError(f"sidecar line {number}: expected two integers")
            try:
                pairs.append((int(fields[0]), int(fields[1])))
            except ValueError as exc:
                raise DataError(f"sidecar line {number}: {exc}") from exc
    return pairs


class _WordFilter:
    """Stopword / punctuation / single-character filter over plain strings."""

    def __init__(self, stopwords: Iterable[str]):
        self.stopwords = frozenset(w.lower() for w in stopwords)

    def keep(self, word: str) -> bool:
        if len(word) <= 1:
            return False
        if word.lower() in self.stopwords:
            return False
        return not any(is_punctuation(c) for c in word)


def title_words(dataset, tokenizer: Callable[[str, int], list[str]],
                stopwords: Iterable[str] = ()) -> set[str]:
    """Filtered, lowercased word types in the truncated region of each section text."""
    keep = _WordFilter(stopwords).keep
    words: set[str] = set()
    for index, example in enumerate(dataset.examples):
        for word in tokenizer(example.text, index):
            if keep(word):
                words.add(word.lower())
    return words


def title_word_overlap(l1_train, l2_test,
                       tokenizer: Callable[[str, int], list[str]] | None = None,
                       l1_tokenizer: Callable[[str, int], list[str]] | None = None,
                       stopwords: Iterable[str] = ()) -> OverlapReport:
    """Type-level word overlap between two title datasets over truncated sections.

    `tokenizer` truncates the L2-test texts and `l1_tokenizer` the L1-train
    texts (sidecar boundaries are file-specific); both default to the
    whitespace rule.
    """
    if not l1_train.examples or not l2_test.examples:
        raise DataError("title overlap needs nonempty datasets")
    l2_tok = tokenizer or whitespace_tokenizer
    l1_tok = l1_tokenizer or whitespace_tokenizer
    l1_words = title_words(l1_train, l1_tok, stopwords)
    l2_words = title_words(l2_test, l2_tok, stopwords)
    if not l2_words:
        raise DataError("L2-test word set is empty after filtering")
    return OverlapReport(len(l2_words & l1_words), len(l2_words))


def word_partition(l1_train: Corpus, l2_test: Corpus,
                   stopwords: Iterable[str] = ()) -> WordPartition:
    """Split L2-test content-word types into common-with-L1 and unique-to-L2."""
    stopset = frozenset(w.lower() for w in stopwords)
    l1_words = {t.text.lower() for t in l1_train.tokens() if is_content_word(t, stopset)}
    l2_words = {t.text.lower() for t in l2_test.tokens() if is_content_word(t, stopset)}
    return WordPartition(frozenset(l2_words & l1_words), frozenset(l2_words - l1_words))


def entity_partition(l1_train: Corpus, l2_test: Corpus) -> EntityPartition:
    """Split L2-test entities into common-with-L1 and unique-to-L2, by (label, surface).

    Surfaces compare lowercased; unique entities are grouped by label because
    replacements must preserve the entity class.
    """
    l1_entities = {(c.label, c.lowered()) for c in corpus_chunks(l1_train)}
    l2_entities = {(c.label, c.lowered()) for c in corpus_chunks(l2_test)}
    common = frozenset(l2_entities & l1_entities)
    unique_by_label: dict[str, set[tuple[str, ...]]] = {}
    for label, surface in l2_entities - l1_entities:
        unique_by_label.setdefault(label, set()).add(surface)
    return EntityPartition(common, {k: frozenset(v) for k, v in unique_by_label.items()})
