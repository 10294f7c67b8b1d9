"""Shared fixtures: corpus builders and seeded random data generators.

Test-side randomness uses the stdlib `random` module so that oracles stay
independent of the numpy-based streams used inside the package.
"""

import random
from pathlib import Path

import pytest

from xlrobust.corpus import BioTag, Corpus, Sentence, Token

DATA_DIR = Path(__file__).parent / "data"

LABELS = ("PER", "LOC", "ORG", "MISC")


def sentence_of(*pairs) -> Sentence:
    return Sentence(tuple(Token(text, BioTag.parse(tag)) for text, tag in pairs))


def corpus_of(sentences, language="") -> Corpus:
    return Corpus(tuple(sentence_of(*pairs) for pairs in sentences), language)


def tags_of(sentence: Sentence) -> list[str]:
    return [str(t.tag) for t in sentence]


def random_valid_tags(rnd: random.Random, length: int, labels=LABELS) -> list[str]:
    """A random BIO-valid tag string list of the given length."""
    tags = []
    previous = "O"
    for _ in range(length):
        options = ["O", "B"]
        if previous != "O":
            options.append("I")
        kind = rnd.choice(options)
        if kind == "O":
            tags.append("O")
            previous = "O"
        elif kind == "B":
            label = rnd.choice(labels)
            tags.append(f"B-{label}")
            previous = f"B-{label}"
        else:
            label = previous.split("-", 1)[1]
            tags.append(f"I-{label}")
            previous = f"I-{label}"
    return tags


WORD_CHARS = "abcdefghijklmnoprstuvz" + "àéîñöžšč"


def random_word(rnd: random.Random, min_len=2, max_len=9) -> str:
    return "".join(rnd.choice(WORD_CHARS) for _ in range(rnd.randint(min_len, max_len)))


def random_corpus(rnd: random.Random, max_sentences=20, language="") -> Corpus:
    """A random BIO-valid corpus with arbitrary words."""
    sentences = []
    for _ in range(rnd.randint(1, max_sentences)):
        length = rnd.randint(1, 12)
        tags = random_valid_tags(rnd, length)
        words = [random_word(rnd) for _ in range(length)]
        sentences.append(list(zip(words, tags)))
    return corpus_of(sentences, language)


def random_corpus_pair(rnd: random.Random, max_sentences=50):
    """An (l1_train, l2_test) pair with controlled shared/unique vocabulary.

    Both corpora draw entities and context words from shared pools plus
    side-specific pools, so entity/word partitions are non-trivial: some
    L2 entities and words also occur in L1, others are unique to L2.
    """
    shared_words = [f"mot{i}" for i in range(rnd.randint(2, 8))]
    l1_words = [f"gauche{i}" for i in range(rnd.randint(1, 6))]
    l2_words = [f"droite{i}" for i in range(rnd.randint(2, 8))]

    def entity_pool(prefix, count):
        pool = []
        for i in range(count):
            size = rnd.randint(1, 3)
            pool.append(tuple(f"{prefix}{i}x{j}" for j in range(size)))
        return pool

    labels = list(rnd.sample(LABELS, rnd.randint(1, 3)))
    shared_entities = {label: entity_pool(f"se{label}", rnd.randint(1, 3)) for label in labels}
    l2_entities = {label: entity_pool(f"ue{label}", rnd.randint(1, 3)) for label in labels}
    l1_entities = {label: entity_pool(f"oe{label}", rnd.randint(0, 2)) for label in labels}

    def build(words, extra_words, entities, extra_entities, n_sentences):
        sentences = []
        for _ in range(n_sentences):
            pairs = []
            for _ in range(rnd.randint(1, 6)):
                if rnd.random() < 0.55:
                    pool = words + extra_words
                    pairs.append((rnd.choice(pool), "O"))
                else:
                    label = rnd.choice(labels)
                    surface_pool = entities[label] + extra_entities.get(label, [])
                    surface = rnd.choice(surface_pool)
                    pairs.append((surface[0], f"B-{label}"))
                    pairs.extend((w, f"I-{label}") for w in surface[1:])
            sentences.append(pairs)
        return corpus_of(sentences)

    l1 = build(shared_words, l1_words, shared_entities, l1_entities,
               rnd.randint(1, max_sentences))
    l2 = build(shared_words, l2_words, shared_entities, l2_entities,
               rnd.randint(1, max_sentences))
    return l1, l2


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fr_corpus():
    from xlrobust.corpus import parse_conll
    return parse_conll((DATA_DIR / "l1_train_fr.conll").read_text(encoding="utf-8"), "fr")


@pytest.fixture
def br_corpus():
    from xlrobust.corpus import parse_conll
    return parse_conll((DATA_DIR / "l2_test_br.conll").read_text(encoding="utf-8"), "br")


@pytest.fixture
def br_stopwords():
    from xlrobust.corpus import load_stopwords
    return load_stopwords(DATA_DIR / "stopwords_br.txt")


@pytest.fixture
def fr_stopwords():
    from xlrobust.corpus import load_stopwords
    return load_stopwords(DATA_DIR / "stopwords_fr.txt")


@pytest.fixture
def br_vectors():
    from xlrobust.embedding import load_table
    return load_table(DATA_DIR / "vectors_br.txt")
