"""Cross-lingual robustness toolkit: perturbations, overlap, datasets, scoring."""

from .corpus import (
    BioTag,
    Corpus,
    EntityChunk,
    Sentence,
    TagKind,
    Token,
    content_words,
    extract_chunks,
    load_stopwords,
    parse_conll,
    serialize_conll,
    validate_bio,
    validate_corpus,
)
from .embedding import EmbeddingTable, SimilarityResult, cosine, load_table, nearest_unique
from .lexicon import Lexicon, LexiconKind, fetch_category, load_lexicon, sample, save_lexicon
from .overlap import (
    EntityPartition,
    OverlapReport,
    WordPartition,
    entity_partition,
    ner_word_overlap,
    title_word_overlap,
    word_partition,
)
from .perturb import (
    PerturbationManifest,
    PerturbationRecord,
    perturb_p1,
    perturb_p2,
    perturb_p3,
    perturb_p4,
    perturb_p5,
    perturb_title,
)
from .score import (
    ScoreReport,
    TTestResult,
    average_runs,
    delta_overlap_report,
    paired_ttest,
    score_ner,
    score_title,
    significance_table,
)
from .seeds import SeedStream
from .titletask import TitleDataset, TitleExample, build_examples, extract_sections, split

__version__ = "0.1.0"
