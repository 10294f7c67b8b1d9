"""Command-line entry points: export-vectors and export-token-counts."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .export import ExportError, export_token_counts, export_vectors, make_job


def _read_words(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def main_vectors(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="export-vectors",
        description="Embed a word list through a dummy-sentence template.")
    parser.add_argument("--model", required=True, help="model id or local path")
    parser.add_argument("--words", required=True, help="UTF-8 file, one word per line")
    parser.add_argument("--template", choices=["cls_sep", "bos_eos"], required=True)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        job = make_job(args.model, _read_words(args.words), args.template,
                       args.out, args.batch_size)
        vectors = export_vectors(job)
    except (ExportError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"exported {len(vectors)} vectors to {args.out}", file=sys.stderr)
    return 0


def _read_texts(args) -> list[str]:
    if args.texts:
        return Path(args.texts).read_text(encoding="utf-8").splitlines()
    texts = []
    for number, line in enumerate(
            Path(args.dataset).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        if "text" not in record:
            raise ValueError(f"{args.dataset}:{number}: record has no 'text' field")
        texts.append(str(record["text"]))
    return texts


def main_token_counts(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="export-token-counts",
        description="Write per-text subword counts and 128-token word boundaries.")
    parser.add_argument("--model", required=True)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--texts", help="UTF-8 file, one text per line")
    source.add_argument("--dataset", help="JSON-lines file with a 'text' field per record")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        pairs = export_token_counts(_read_texts(args), args.model, args.out)
    except (ExportError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(pairs)} sidecar rows to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main_vectors())
