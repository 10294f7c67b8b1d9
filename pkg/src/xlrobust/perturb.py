"""The five adversarial corpus perturbations plus the title-task variant.

Rules:
  p1  swap the first token of every PER entity for a random given name
  p2  swap every LOC span for a random placename
  p3  swap entities shared with L1-train for entities unique to L2-test
  p4  swap shared context words for unique words (cosine-nearest or random)
  p5  p3 then p4 under independently forked random streams

All rules preserve sentence count and the tags of untouched tokens, and
emit a manifest (records + skip counts + seed) sufficient to reproduce and
audit the output. Randomness is drawn from per-rule, per-sentence named
streams, so results are independent of evaluation order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .corpus import BioTag, Corpus, Sentence, Token, extract_chunks
from .embedding import EmbeddingTable, nearest_unique
from .errors import DataError, LexiconError, MissingVectorError, NoCandidatesError
from .lexicon import Lexicon, LexiconKind, sample
from .overlap import entity_partition, title_words, whitespace_tokenizer, word_partition
from .seeds import SeedStream, choose

PER_LABEL = "PER"
LOC_LABEL = "LOC"

SKIP_NO_UNIQUE_ENTITY = "no_unique_entity"
SKIP_MISSING_VECTOR = "missing_vector"
SKIP_NO_CANDIDATES = "no_candidates"


@dataclass(frozen=True)
class PerturbationRecord:
    rule: str
    sentence_index: int
    token_span: tuple[int, int]  # original indices, half-open
    original_surface: str
    replacement_surface: str
    mechanism: str  # random_lexicon | entity_swap | cosine | random_word


@dataclass(frozen=True)
class PerturbationManifest:
    seed: int
    rule: str
    mode: str | None = None
    inputs: dict = field(default_factory=dict)
    records: tuple[PerturbationRecord, ...] = ()
    skipped: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rule": self.rule,
            "mode": self.mode,
            "inputs": self.inputs,
            "records": [vars(r) | {"token_span": list(r.token_span)} for r in self.records],
            "skipped": dict(self.skipped),
        }

    def with_inputs(self, inputs: dict) -> "PerturbationManifest":
        return replace(self, inputs=inputs)


def _splice(sentence: Sentence, ops: list[tuple[int, int, list[Token]]]) -> Sentence:
    """Replace non-overlapping [start, end) spans; ops must be sorted by start."""
    out: list[Token] = []
    cursor = 0
    for start, end, new_tokens in ops:
        out.extend(sentence.tokens[cursor:start])
        out.extend(new_tokens)
        cursor = end
    out.extend(sentence.tokens[cursor:])
    return Sentence(tuple(out))


def _entity_tokens(words: list[str], label: str) -> list[Token]:
    tags = [BioTag.begin(label)] + [BioTag.inside(label)] * (len(words) - 1)
    return [Token(w, t) for w, t in zip(words, tags)]


def _match_case(substitute: str, original: str) -> str:
    if original[:1].isupper():
        return substitute[:1].upper() + substitute[1:]
    return substitute


def perturb_p1(corpus: Corpus, names: Lexicon, stream: SeedStream,
               label: str = PER_LABEL) -> tuple[Corpus, PerturbationManifest]:
    """Replace the first token of every PER chunk with a random given name.

    A multi-word name keeps the rest of the chunk: its first word replaces
    the token and the remaining words are inserted after it as Inside tokens
    (the one case where a perturbation changes token count).
    """
    if names.kind is not LexiconKind.GIVEN_NAMES:
        raise LexiconError(f"p1 needs a given-names lexicon, got {names.kind.value}")
    _check_language(corpus, names)
    if not names.entries:
        raise LexiconError("given-names lexicon is empty")
    sentences = []
    records = []
    for index, sentence in enumerate(corpus):
        chunks = [c for c in extract_chunks(sentence, index) if c.label == label]
        if not chunks:
            sentences.append(sentence)
            continue
        gen = stream.child("p1", index).generator()
        ops = []
        for chunk in chunks:
            name = sample(names, gen)
            words = name.split()
            ops.append((chunk.start, chunk.start + 1, _entity_tokens(words, label)))
            records.append(PerturbationRecord(
                "P1", index, (chunk.start, chunk.start + 1),
                chunk.surface[0], name, "random_lexicon"))
        sentences.append(_splice(sentence, ops))
    manifest = PerturbationManifest(stream.seed, "P1", records=tuple(records), skipped={})
    return Corpus(tuple(sentences), corpus.language), manifest


def perturb_p2(corpus: Corpus, places: Lexicon, stream: SeedStream,
               label: str = LOC_LABEL) -> tuple[Corpus, PerturbationManifest]:
    """Replace every LOC span wholesale with a random placename (span length may change)."""
    if places.kind is not LexiconKind.PLACES:
        raise LexiconError(f"p2 needs a places lexicon, got {places.kind.value}")
    _check_language(corpus, places)
    if not places.entries:
        raise LexiconError("places lexicon is empty")
    sentences = []
    records = []
    for index, sentence in enumerate(corpus):
        chunks = [c for c in extract_chunks(sentence, index) if c.label == label]
        if not chunks:
            sentences.append(sentence)
            continue
        gen = stream.child("p2", index).generator()
        ops = []
        for chunk in chunks:
            place = sample(places, gen)
            ops.append((chunk.start, chunk.end, _entity_tokens(place.split(), label)))
            records.append(PerturbationRecord(
                "P2", index, (chunk.start, chunk.end),
                " ".join(chunk.surface), place, "random_lexicon"))
        sentences.append(_splice(sentence, ops))
    manifest = PerturbationManifest(stream.seed, "P2", records=tuple(records), skipped={})
    return Corpus(tuple(sentences), corpus.language), manifest


def _unique_entity_pools(l1_train: Corpus, l2_test: Corpus):
    """Common keys plus, per label, the unique surfaces with a cased representative."""
    partition = entity_partition(l1_train, l2_test)
    representative: dict[tuple[str, tuple[str, ...]], tuple[str, ...]] = {}
    for sentence_index, sentence in enumerate(l2_test):
        for chunk in extract_chunks(sentence, sentence_index):
            key = (chunk.label, chunk.lowered())
            representative.setdefault(key, chunk.surface)
    pools = {
        label: sorted(surfaces)
        for label, surfaces in partition.unique_by_label.items()
    }
    return partition.common_entities, pools, representative


def perturb_p3(l2_test: Corpus, l1_train: Corpus, stream: SeedStream,
               redraw_per_occurrence: bool = False) -> tuple[Corpus, PerturbationManifest]:
    """Replace every entity shared with L1-train by one unique to L2-test.

    By default a shared entity type is mapped to one replacement for the
    whole run; redraw_per_occurrence draws afresh at each occurrence. When
    a label has no unique entities the occurrence stays put and is counted
    under no_unique_entity.
    """
    common, pools, representative = _unique_entity_pools(l1_train, l2_test)
    skipped = {SKIP_NO_UNIQUE_ENTITY: 0}

    mapping: dict[tuple[str, tuple[str, ...]], tuple[str, ...] | None] = {}
    if not redraw_per_occurrence:
        gen = stream.child("p3", "mapping").generator()
        for key in sorted(common):
            label = key[0]
            pool = pools.get(label)
            mapping[key] = choose(gen, pool) if pool else None

    sentences = []
    records = []
    for index, sentence in enumerate(l2_test):
        chunks = [c for c in extract_chunks(sentence, index)
                  if (c.label, c.lowered()) in common]
        if not chunks:
            sentences.append(sentence)
            continue
        gen = stream.child("p3", index).generator() if redraw_per_occurrence else None
        ops = []
        for chunk in chunks:
            key = (chunk.label, chunk.lowered())
            if redraw_per_occurrence:
                pool = pools.get(chunk.label)
                drawn = choose(gen, pool) if pool else None
            else:
                drawn = mapping[key]
            if drawn is None:
                skipped[SKIP_NO_UNIQUE_ENTITY] += 1
                continue
            words = list(representative.get((chunk.label, drawn), drawn))
            ops.append((chunk.start, chunk.end, _entity_tokens(words, chunk.label)))
            records.append(PerturbationRecord(
                "P3", index, (chunk.start, chunk.end),
                " ".join(chunk.surface), " ".join(words), "entity_swap"))
        sentences.append(_splice(sentence, ops))
    manifest = PerturbationManifest(stream.seed, "P3", records=tuple(records), skipped=skipped)
    return Corpus(tuple(sentences), l2_test.language), manifest


def _substitution_mapping(common: frozenset[str], unique: frozenset[str],
                          table: EmbeddingTable | None, mode: str,
                          stream: SeedStream, skipped: dict) -> dict[str, str]:
    """One substitute per shared word type: cosine-nearest or a uniform draw."""
    if mode not in ("cosine", "random"):
        raise ValueError(f"mode must be 'cosine' or 'random', got {mode!r}")
    if mode == "cosine" and (table is None or not len(table)):
        raise DataError("cosine mode requires a non-empty embedding table")
    gen = stream.child("mapping").generator()
    pool = sorted(unique)
    mapping: dict[str, str] = {}
    for word in sorted(common):
        if mode == "random":
            if not pool:
                skipped[SKIP_NO_CANDIDATES] += 1
                continue
            mapping[word] = choose(gen, pool)
        else:
            try:
                mapping[word] = nearest_unique(word, unique, table).word
            except MissingVectorError:
                skipped[SKIP_MISSING_VECTOR] += 1
            except NoCandidatesError:
                skipped[SKIP_NO_CANDIDATES] += 1
    return mapping


def perturb_p4(l2_test: Corpus, l1_train: Corpus, stream: SeedStream,
               table: EmbeddingTable | None = None, stopwords=(),
               mode: str = "cosine") -> tuple[Corpus, PerturbationManifest]:
    """Replace context words shared with L1-train by words unique to L2-test.

    Only Outside-tagged tokens are rewritten; entity tokens are never
    touched. The substitute keeps the original token's initial
    capitalization. Shared words without a vector (or with no usable
    candidate) are skipped and counted.
    """
    partition = word_partition(l1_train, l2_test, stopwords)
    skipped = {SKIP_MISSING_VECTOR: 0, SKIP_NO_CANDIDATES: 0}
    mechanism = "cosine" if mode == "cosine" else "random_word"
    mapping = _substitution_mapping(partition.common, partition.unique, table, mode,
                                    stream.child("p4"), skipped)
    sentences = []
    records = []
    for index, sentence in enumerate(l2_test):
        tokens = list(sentence.tokens)
        changed = False
        for position, token in enumerate(tokens):
            if not token.tag.is_outside():
                continue
            substitute = mapping.get(token.text.lower())
            if substitute is None:
                continue
            replacement = _match_case(substitute, token.text)
            tokens[position] = Token(replacement, token.tag)
            changed = True
            records.append(PerturbationRecord(
                "P4", index, (position, position + 1),
                token.text, replacement, mechanism))
        sentences.append(Sentence(tuple(tokens)) if changed else sentence)
    manifest = PerturbationManifest(stream.seed, "P4", mode=mode,
                                    records=tuple(records), skipped=skipped)
    return Corpus(tuple(sentences), l2_test.language), manifest


def perturb_p5(l2_test: Corpus, l1_train: Corpus, stream: SeedStream,
               table: EmbeddingTable | None = None, stopwords=(),
               mode: str = "cosine") -> tuple[Corpus, PerturbationManifest]:
    """Entity swap then context-word swap, on independent forked streams."""
    p3_out, p3_manifest = perturb_p3(l2_test, l1_train, stream.child("p3"))
    p4_out, p4_manifest = perturb_p4(p3_out, l1_train, stream.child("p4"),
                                     table, stopwords, mode)
    skipped = dict(p3_manifest.skipped)
    for key, value in p4_manifest.skipped.items():
        skipped[key] = skipped.get(key, 0) + value
    manifest = PerturbationManifest(stream.seed, "P5", mode=mode,
                                    records=p3_manifest.records + p4_manifest.records,
                                    skipped=skipped)
    return p4_out, manifest


_WHITESPACE_SPLIT = re.compile(r"(\s+)")


def perturb_title(dataset, l1_train, stream: SeedStream,
                  table: EmbeddingTable | None = None, stopwords=(),
                  mode: str = "cosine", tokenizer=None, l1_tokenizer=None):
    """Context-word substitution over a title dataset's section texts.

    The shared/unique word sets come from the truncated (first 128 token)
    regions per the overlap rules; one mapping serves the whole dataset and
    is applied to section texts only, never to candidate titles.
    """
    from .titletask import TitleDataset, TitleExample

    l2_words = title_words(dataset, tokenizer or whitespace_tokenizer, stopwords)
    l1_words = title_words(l1_train, l1_tokenizer or whitespace_tokenizer, stopwords)
    common = frozenset(l2_words & l1_words)
    unique = frozenset(l2_words - l1_words)
    skipped = {SKIP_MISSING_VECTOR: 0, SKIP_NO_CANDIDATES: 0}
    mechanism = "cosine" if mode == "cosine" else "random_word"
    mapping = _substitution_mapping(common, unique, table, mode,
                                    stream.child("title"), skipped)
    examples = []
    records = []
    for index, example in enumerate(dataset.examples):
        segments = _WHITESPACE_SPLIT.split(example.text)
        word_ordinal = 0
        changed = False
        for seg_index, segment in enumerate(segments):
            if not segment or segment.isspace():
                continue
            substitute = mapping.get(segment.lower())
            if substitute is not None:
                replacement = _match_case(substitute, segment)
                segments[seg_index] = replacement
                changed = True
                records.append(PerturbationRecord(
                    "P4", index, (word_ordinal, word_ordinal + 1),
                    segment, replacement, mechanism))
            word_ordinal += 1
        if changed:
            examples.append(TitleExample("".join(segments), example.candidates,
                                         example.answer_index, example.page_id))
        else:
            examples.append(example)
    manifest = PerturbationManifest(stream.seed, "P4-title", mode=mode,
                                    records=tuple(records), skipped=skipped)
    return TitleDataset(dataset.language, tuple(examples)), manifest


def _check_language(corpus: Corpus, lexicon: Lexicon) -> None:
    if corpus.language and lexicon.language and corpus.language != lexicon.language:
        raise DataError(
            f"lexicon language {lexicon.language!r} does not match corpus {corpus.language!r}")
