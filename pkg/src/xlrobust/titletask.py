"""Wikipedia section-title-prediction dataset: extraction, assembly, split.

Input is JSON-lines of extracted articles (one object per page with a
`sections` list of level/heading/body); output is JSON-lines of examples,
each a section body plus four candidate titles of which one is correct and
the other three come from sibling sections of the same page.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import SchemaError
from .seeds import SeedStream

logger = logging.getLogger(__name__)

EXAMPLE_CAP = 100_000
CANDIDATE_COUNT = 4
SECTION_LEVELS = (2, 3)


@dataclass(frozen=True)
class Section:
    page_id: str
    page_title: str
    level: int
    title: str
    text: str


@dataclass(frozen=True)
class TitleExample:
    text: str
    candidates: tuple[str, ...]
    answer_index: int
    page_id: str

    def __post_init__(self):
        if len(self.candidates) != CANDIDATE_COUNT:
            raise ValueError(f"expected {CANDIDATE_COUNT} candidates, got {len(self.candidates)}")
        if len(set(self.candidates)) != CANDIDATE_COUNT:
            raise ValueError("candidate titles must be pairwise distinct")
        if not 0 <= self.answer_index < CANDIDATE_COUNT:
            raise ValueError(f"answer_index {self.answer_index} out of range")

    @property
    def answer(self) -> str:
        return self.candidates[self.answer_index]


@dataclass(frozen=True)
class TitleDataset:
    language: str
    examples: tuple[TitleExample, ...]

    def __post_init__(self):
        if len(self.examples) > EXAMPLE_CAP:
            raise ValueError(f"dataset exceeds the {EXAMPLE_CAP} example cap")

    def __len__(self) -> int:
        return len(self.examples)


def extract_sections(records: Iterable[dict]) -> Iterator[tuple[str, str, list[Section]]]:
    """Yield (page_id, page_title, sections) for pages with at least 4 usable sections.

    A section is usable when its level is 2 or 3 and both heading and body
    are nonempty; the >=4 threshold applies after that filter. Malformed
    records are skipped with a warning.
    """
    for ordinal, record in enumerate(records):
        try:
            page_title = str(record["title"])
            page_id = str(record.get("id", ordinal))
            raw_sections = record["sections"]
            sections = []
            for raw in raw_sections:
                level = int(raw["level"])
                heading = str(raw["heading"]).strip()
                body = str(raw["body"]).strip()
                if level in SECTION_LEVELS and heading and body:
                    sections.append(Section(page_id, page_title, level, heading, body))
        except (KeyError, TypeError, ValueError) as exc:
            logger.warning("skipping malformed article record %d: %s", ordinal, exc)
            continue
        if len(sections) >= CANDIDATE_COUNT:
            yield page_id, page_title, sections


def build_examples(pages: Iterable[tuple[str, str, list[Section]]], stream: SeedStream,
                   language: str = "", cap: int = EXAMPLE_CAP) -> TitleDataset:
    """Turn extracted pages into 4-way multiple-choice examples.

    One example per section; the three distractors are drawn without
    replacement from the page's other distinct section titles, and the
    correct answer lands at a uniformly drawn index. Pages with fewer than
    4 distinct titles are skipped and counted. The pool is then shuffled
    and truncated to `cap`.
    """
    gen = stream.child("build").generator()
    examples: list[TitleExample] = []
    skipped_pages = 0
    for page_id, _, sections in pages:
        distinct_titles = sorted({s.title for s in sections})
        if len(distinct_titles) < CANDIDATE_COUNT:
            skipped_pages += 1
            continue
        for section in sections:
            others = [t for t in distinct_titles if t != section.title]
            picks = gen.permutation(len(others))[:CANDIDATE_COUNT - 1]
            distractors = [others[int(i)] for i in picks]
            answer_index = int(gen.integers(0, CANDIDATE_COUNT))
            candidates = distractors[:answer_index] + [section.title] + distractors[answer_index:]
            examples.append(TitleExample(section.text, tuple(candidates), answer_index, page_id))
    if skipped_pages:
        logger.warning("skipped %d page(s) with fewer than %d distinct section titles",
                       skipped_pages, CANDIDATE_COUNT)
    shuffle_gen = stream.child("shuffle").generator()
    order = shuffle_gen.permutation(len(examples))
    shuffled = [examples[int(i)] for i in order]
    return TitleDataset(language, tuple(shuffled[:cap]))


def split(dataset: TitleDataset, stream: SeedStream, ratio: float = 0.8,
          group_by_page: bool = False) -> tuple[TitleDataset, TitleDataset]:
    """Shuffle and split into train/test; floor(ratio * n) examples go to train.

    With group_by_page=True, whole pages are assigned to one side, keeping
    page vocabulary from leaking across the split (train size then only
    approximates the ratio).
    """
    n = len(dataset.examples)
    if n < 2:
        raise ValueError("need at least 2 examples to split")
    gen = stream.child("split").generator()
    target = int(ratio * n)
    if group_by_page:
        pages: dict[str, list[TitleExample]] = {}
        for example in dataset.examples:
            pages.setdefault(example.page_id, []).append(example)
        page_ids = sorted(pages)
        order = gen.permutation(len(page_ids))
        train: list[TitleExample] = []
        test: list[TitleExample] = []
        for i in order:
            bucket = train if len(train) < target else test
            bucket.extend(pages[page_ids[int(i)]])
    else:
        order = gen.permutation(n)
        shuffled = [dataset.examples[int(i)] for i in order]
        train, test = shuffled[:target], shuffled[target:]
    return (TitleDataset(dataset.language, tuple(train)),
            TitleDataset(dataset.language, tuple(test)))


def serialize_title_dataset(dataset: TitleDataset) -> str:
    lines = []
    for example in dataset.examples:
        lines.append(json.dumps({
            "text": example.text,
            "candidates": list(example.candidates),
            "answer_index": example.answer_index,
            "page_id": example.page_id,
        }, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def save_title_dataset(dataset: TitleDataset, path: str | Path) -> None:
    Path(path).write_text(serialize_title_dataset(dataset), encoding="utf-8")


def load_title_dataset(source: str | Path | IO[str], language: str = "") -> TitleDataset:
    """Load a JSON-lines dataset, enforcing the example invariants per line."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    examples = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(number, f"invalid JSON: {exc}") from exc
        try:
            examples.append(TitleExample(
                text=str(record["text"]),
                candidates=tuple(str(c) for c in record["candidates"]),
                answer_index=int(record["answer_index"]),
                page_id=str(record["page_id"]),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(number, str(exc)) from exc
    return TitleDataset(language, tuple(examples))


def read_article_records(source: str | Path | IO[str]) -> Iterator[dict]:
    """Stream article JSON objects from a JSON-lines file."""
    if hasattr(source, "read"):
        lines = iter(source.read().splitlines())
    else:
        lines = iter(Path(source).read_text(encoding="utf-8").splitlines())
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            logger.warning("skipping unparseable article line %d: %s", number, exc)
