"""CoNLL/WikiANN-style NER corpora: parsing, validation, chunking.

A corpus is an ordered sequence of sentences, each an ordered sequence of
(token text, BIO tag) pairs. All types are immutable; every operation is a
pure function, so corpora can be shared freely across threads.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator

from .errors import BioValidationError, ConllParseError

logger = logging.getLogger(__name__)

OUTSIDE_TAG = "O"


class TagKind(Enum):
    OUTSIDE = "O"
    BEGIN = "B"
    INSIDE = "I"


@dataclass(frozen=True, slots=True)
class BioTag:
    """One BIO tag: O, B-<label>, or I-<label>."""

    kind: TagKind
    label: str | None = None

    def __post_init__(self):
        if self.kind is TagKind.OUTSIDE:
            if self.label is not None:
                raise ValueError("outside tag carries no label")
        else:
            if not self.label or any(c.isspace() for c in self.label):
                raise ValueError(f"bad entity label: {self.label!r}")

    @classmethod
    def outside(cls) -> "BioTag":
        return _OUTSIDE

    @classmethod
    def begin(cls, label: str) -> "BioTag":
        return cls(TagKind.BEGIN, label)

    @classmethod
    def inside(cls, label: str) -> "BioTag":
        return cls(TagKind.INSIDE, label)

    @classmethod
    def parse(cls, text: str) -> "BioTag":
        """Parse the serialized form; raises ValueError on anything else."""
        if text == OUTSIDE_TAG:
            return _OUTSIDE
        if len(text) > 2 and text[1] == "-" and text[0] in ("B", "I"):
            kind = TagKind.BEGIN if text[0] == "B" else TagKind.INSIDE
            return cls(kind, text[2:])
        raise ValueError(f"unparseable BIO tag: {text!r}")

    def is_outside(self) -> bool:
        return self.kind is TagKind.OUTSIDE

    def __str__(self) -> str:
        if self.kind is TagKind.OUTSIDE:
            return OUTSIDE_TAG
        return f"{self.kind.value}-{self.label}"


_OUTSIDE = BioTag(TagKind.OUTSIDE, None)


@dataclass(frozen=True, slots=True)
class Token:
    text: str
    tag: BioTag

    def __post_init__(self):
        if not self.text or any(c.isspace() for c in self.text):
            raise ValueError(f"token text must be nonempty without whitespace: {self.text!r}")


@dataclass(frozen=True, slots=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)


@dataclass(frozen=True, slots=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    language: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def tokens(self) -> Iterator[Token]:
        for sentence in self.sentences:
            yield from sentence


@dataclass(frozen=True, slots=True)
class EntityChunk:
    """A maximal B/I run of one label: the unit of replacement and overlap."""

    label: str
    sentence_index: int
    start: int
    end: int  # half-open
    surface: tuple[str, ...]

    def lowered(self) -> tuple[str, ...]:
        return tuple(w.lower() for w in self.surface)


def parse_conll(source: str | IO[str], language: str = "") -> Corpus:
    """Parse token-per-line NER data ("<token><sep><tag>", blank line = sentence break).

    The separator is a tab or a run of spaces. Raises ConllParseError with
    the offending line number on malformed lines; empty input yields an
    empty corpus.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source.read().splitlines()
    sentences: list[Sentence] = []
    current: list[Token] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            if current:
                sentences.append(Sentence(tuple(current)))
                current = []
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ConllParseError(number, f"expected '<token> <tag>', got {line!r}")
        text, raw_tag = fields
        try:
            tag = BioTag.parse(raw_tag)
        except ValueError as exc:
            raise ConllParseError(number, str(exc)) from exc
        current.append(Token(text, tag))
    if current:
        sentences.append(Sentence(tuple(current)))
    return Corpus(tuple(sentences), language)


def serialize_conll(corpus: Corpus) -> str:
    """Inverse of parse_conll: tab separator, one blank line between sentences."""
    blocks = []
    for sentence in corpus:
        blocks.append("".join(f"{t.text}\t{t.tag}\n" for t in sentence))
    return "\n".join(blocks)


def validate_bio(sentence: Sentence, mode: str = "strict") -> tuple[Sentence, list[tuple[int, str]]]:
    """Check (or repair) Inside-without-Begin violations.

    strict: return the sentence unchanged plus (index, description) for every
    Inside tag not preceded by a Begin/Inside of the same label.
    repair: rewrite each such tag to Begin of the same label; repairs cascade
    left to right, so a repaired tag can legitimize the Inside tag after it.
    """
    if mode not in ("strict", "repair"):
        raise ValueError(f"mode must be 'strict' or 'repair', got {mode!r}")
    violations: list[tuple[int, str]] = []
    repaired: list[Token] = []
    prev: BioTag = BioTag.outside()
    for index, token in enumerate(sentence):
        tag = token.tag
        if tag.kind is TagKind.INSIDE:
            ok = prev.kind in (TagKind.BEGIN, TagKind.INSIDE) and prev.label == tag.label
            if not ok:
                violations.append((index, f"I-{tag.label} not preceded by B-{tag.label}/I-{tag.label}"))
                if mode == "repair":
                    token = Token(token.text, BioTag.begin(tag.label))
        repaired.append(token)
        prev = token.tag
    if mode == "repair":
        return Sentence(tuple(repaired)), violations
    return sentence, violations


def validate_corpus(corpus: Corpus, mode: str = "repair") -> tuple[Corpus, list[tuple[int, int, str]]]:
    """Apply validate_bio to every sentence; violations carry the sentence index."""
    sentences = []
    violations = []
    for i, sentence in enumerate(corpus):
        fixed, found = validate_bio(sentence, mode)
        sentences.append(fixed)
        violations.extend((i, index, text) for index, text in found)
    if violations:
        logger.warning("%d BIO violation(s) in %d-sentence corpus (mode=%s)",
                       len(violations), len(corpus), mode)
    return Corpus(tuple(sentences), corpus.language), violations


def extract_chunks(sentence: Sentence, sentence_index: int = 0) -> list[EntityChunk]:
    """Extract maximal B/I runs from a BIO-valid sentence.

    Raises BioValidationError on an Inside tag with no valid predecessor;
    repair the sentence first if the data may be dirty.
    """
    chunks: list[EntityChunk] = []
    start: int | None = None
    label: str | None = None

    def close(end: int):
        nonlocal start, label
        if start is not None:
            surface = tuple(t.text for t in sentence.tokens[start:end])
            chunks.append(EntityChunk(label, sentence_index, start, end, surface))
            start, label = None, None

    for index, token in enumerate(sentence):
        tag = token.tag
        if tag.kind is TagKind.BEGIN:
            close(index)
            start, label = index, tag.label
        elif tag.kind is TagKind.INSIDE:
            if start is None or label != tag.label:
                raise BioValidationError(
                    f"sentence {sentence_index}, token {index}: stray {tag}")
        else:
            close(index)
    close(len(sentence))
    return chunks


def corpus_chunks(corpus: Corpus) -> list[EntityChunk]:
    out = []
    for i, sentence in enumerate(corpus):
        out.extend(extract_chunks(sentence, i))
    return out


def is_punctuation(char: str) -> bool:
    return unicodedata.category(char).startswith("P")


def is_content_word(token: Token, stopwords: frozenset[str] | set[str]) -> bool:
    """Outside-tagged, longer than one char, no punctuation char, not a stopword."""
    if not token.tag.is_outside():
        return False
    if len(token.text) <= 1:
        return False
    lowered = token.text.lower()
    if lowered in stopwords:
        return False
    if any(is_punctuation(c) for c in token.text):
        return False
    return True


def content_words(corpus: Corpus, stopwords: Iterable[str] = ()) -> set[str]:
    """Lowercased content-word types of a corpus (the P4 substitution substrate)."""
    stopset = frozenset(stopwords)
    return {t.text.lower() for t in corpus.tokens() if is_content_word(t, stopset)}


def load_stopwords(path) -> frozenset[str]:
    """Load a word-per-line UTF-8 stopword list (stopwords-iso layout)."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())
