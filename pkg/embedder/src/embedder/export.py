"""Per-word embedding export through a dummy-sentence template.

Each word is wrapped in a minimal templated sequence ([CLS] word [SEP] for
BERT-family models, <bos> word <eos> for RoBERTa/XLM-R-family ones) and run
through the encoder; the exported vector is the final-layer hidden state of
the sequence's first token. Output is word2vec-style text, the format the
consuming toolkit loads embeddings from.

Also writes token-count sidecars: per text, the total subword count and how
many leading whitespace words fit into the first 128 subword tokens, so the
consumer can replicate model-specific truncation without the model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

logger = logging.getLogger(__name__)

TEMPLATES = ("cls_sep", "bos_eos")
TRUNCATION_TOKEN_LIMIT = 128


class ExportError(Exception):
    """Model loading failed or the job is inconsistent with the model."""


@dataclass(frozen=True)
class ExportJob:
    model_id: str
    words: tuple[str, ...]
    template: str
    output_path: str | Path
    batch_size: int = 32

    def __post_init__(self):
        if not self.words:
            raise ValueError("job needs at least one word")
        if self.template not in TEMPLATES:
            raise ValueError(f"template must be one of {TEMPLATES}, got {self.template!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


def make_job(model_id: str, words, template: str, output_path,
             batch_size: int = 32) -> ExportJob:
    """Build a job from raw word input: strip, drop empties, dedup keeping input order."""
    seen = {}
    for word in words:
        word = word.strip()
        if word and word not in seen:
            seen[word] = None
    return ExportJob(model_id, tuple(seen), template, output_path, batch_size)


def load_encoder(model_id: str):
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise ExportError(f"cannot load model {model_id!r}: {exc}") from exc
    model.eval()
    return tokenizer, model


def _template_ids(tokenizer, template: str) -> tuple[int, int]:
    if template == "cls_sep":
        start, end = tokenizer.cls_token_id, tokenizer.sep_token_id
    else:
        start, end = tokenizer.bos_token_id, tokenizer.eos_token_id
    if start is None or end is None:
        raise ExportError(f"model tokenizer provides no {template} special tokens; "
                          "pick the template matching the model family")
    return start, end


def _first_token_states(model, batch: list[list[int]], pad_id: int) -> np.ndarray:
    width = max(len(ids) for ids in batch)
    input_ids = torch.full((len(batch), width), pad_id, dtype=torch.long)
    attention_mask = torch.zeros((len(batch), width), dtype=torch.long)
    for row, ids in enumerate(batch):
        input_ids[row, :len(ids)] = torch.tensor(ids, dtype=torch.long)
        attention_mask[row, :len(ids)] = 1
    with torch.no_grad():
        output = model(input_ids=input_ids, attention_mask=attention_mask)
    return output.last_hidden_state[:, 0, :].to(torch.float64).numpy()


def compute_vectors(job: ExportJob, tokenizer=None, model=None) -> dict[str, np.ndarray]:
    """Embed every job word; returns word -> final-layer first-token state.

    Words whose tokenization is empty are skipped with a warning. Rows keep
    the job's word order (dicts preserve insertion order).
    """
    if tokenizer is None or model is None:
        tokenizer, model = load_encoder(job.model_id)
    start, end = _template_ids(tokenizer, job.template)
    pad_id = tokenizer.pad_token_id if tokenizer.pad_token_id is not None else 0

    sequences: list[tuple[str, list[int]]] = []
    for word in job.words:
        pieces = tokenizer(word, add_special_tokens=False)["input_ids"]
        if not pieces:
            logger.warning("word %r tokenizes to nothing; skipped", word)
            continue
        sequences.append((word, [start] + list(pieces) + [end]))

    vectors: dict[str, np.ndarray] = {}
    for offset in range(0, len(sequences), job.batch_size):
        batch = sequences[offset:offset + job.batch_size]
        states = _first_token_states(model, [ids for _, ids in batch], pad_id)
        for (word, _), state in zip(batch, states):
            vectors[word] = state
    return vectors


def write_table(vectors: dict[str, np.ndarray], dim: int, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vectors)} {dim}\n")
        for word, vector in vectors.items():
            fh.write(word + " " + " ".join(f"{v:.8g}" for v in vector) + "\n")


def export_vectors(job: ExportJob) -> dict[str, np.ndarray]:
    """Run the job end to end and write the embedding file; returns the vectors."""
    tokenizer, model = load_encoder(job.model_id)
    vectors = compute_vectors(job, tokenizer, model)
    write_table(vectors, model.config.hidden_size, job.output_path)
    logger.info("wrote %d vectors (dim %d) to %s",
                len(vectors), model.config.hidden_size, job.output_path)
    return vectors


def token_counts(text: str, tokenizer,
                 limit: int = TRUNCATION_TOKEN_LIMIT) -> tuple[int, int]:
    """(total subword count, words covered by the first `limit` subwords)."""
    words = text.split()
    per_word = [len(tokenizer.tokenize(word)) for word in words]
    total = sum(per_word)
    covered = 0
    budget = limit
    for count in per_word:
        if count > budget:
            break
        budget -= count
        covered += 1
    return total, covered


def export_token_counts(texts: list[str], model_id: str, output_path,
                        tokenizer=None) -> list[tuple[int, int]]:
    """Write one "<count>\\t<boundary>" sidecar line per input text."""
    if not texts:
        raise ValueError("need at least one text")
    if tokenizer is None:
        from transformers import AutoTokenizer
        try:
            tokenizer = AutoTokenizer.from_pretrained(model_id)
        except Exception as exc:
            raise ExportError(f"cannot load tokenizer {model_id!r}: {exc}") from exc
    pairs = [token_counts(text, tokenizer) for text in texts]
    with open(output_path, "w", encoding="utf-8") as fh:
        for total, covered in pairs:
            fh.write(f"{total}\t{covered}\n")
    return pairs
