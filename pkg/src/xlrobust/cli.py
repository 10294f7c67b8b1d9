"""Single command-line entry point for the toolkit.

Exit codes: 0 success, 1 usage error, 2 data error. Output files are
written atomically, and every randomized artifact is accompanied by a
manifest embedding the seed and the digests of its inputs, so any run can
be reproduced and audited byte for byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import lexicon as lexicon_mod
from . import overlap as overlap_mod
from . import perturb as perturb_mod
from . import score as score_mod
from . import titletask as title_mod
from .embedding import load_table
from .errors import DataError
from .ioutil import atomic_write_text, sha256_file
from .seeds import SeedStream

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems must exit 1, not argparse's 2
        raise UsageError(message)


def _digests(paths: dict[str, str | Path]) -> dict:
    return {role: {"path": str(path), "sha256": sha256_file(path)}
            for role, path in paths.items() if path}


def _load_corpus(path: str, language: str = "") -> corpus_mod.Corpus:
    with open(path, encoding="utf-8") as fh:
        parsed = corpus_mod.parse_conll(fh, language)
    repaired, violations = corpus_mod.validate_corpus(parsed, "repair")
    if violations:
        logger.warning("%s: repaired %d BIO violation(s)", path, len(violations))
    return repaired


def _load_stopwords(path: str | None) -> frozenset[str]:
    return corpus_mod.load_stopwords(path) if path else frozenset()


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


# --- subcommand handlers ------------------------------------------------------

def _cmd_validate(args) -> int:
    with open(args.infile, encoding="utf-8") as fh:
        parsed = corpus_mod.parse_conll(fh, args.lang)
    fixed, violations = corpus_mod.validate_corpus(parsed, args.mode)
    for sentence_index, token_index, description in violations:
        print(f"{args.infile}:{sentence_index}:{token_index}: {description}")
    print(f"{len(violations)} violation(s) in {len(parsed)} sentence(s)", file=sys.stderr)
    if args.out:
        atomic_write_text(args.out, corpus_mod.serialize_conll(fixed))
    return 0


def _cmd_fetch_lexicon(args) -> int:
    kind = lexicon_mod.LexiconKind(args.kind)
    lexicon = lexicon_mod.fetch_category(
        args.lang, kind,
        endpoint=args.endpoint,
        page_limit=args.page_limit,
        category=args.category,
        language_name=args.language_name,
        cache_dir=args.cache_dir,
    )
    text_buffer = [f"#lang={lexicon.language} kind={lexicon.kind.value}"]
    text_buffer.extend(lexicon.entries)
    _emit("\n".join(text_buffer) + "\n", args.out)
    print(f"fetched {len(lexicon)} entries", file=sys.stderr)
    return 0


def _overlap_record(l1: str, l2: str, report: overlap_mod.OverlapReport) -> str:
    return f"{l1},{l2},{report.shared_count},{report.total_count},{report.percent:.2f}\n"


def _cmd_overlap(args) -> int:
    stopwords = _load_stopwords(args.stopwords)
    if args.task == "ner":
        l1_corpus = _load_corpus(args.l1_train, args.l1)
        l2_corpus = _load_corpus(args.l2_test, args.l2)
        report = overlap_mod.ner_word_overlap(l1_corpus, l2_corpus,
                                              all_token_denominator=args.all_token_denominator)
        policy = "all-tokens" if args.all_token_denominator else "entity-tokens-only"
        print(f"denominator policy: {policy}", file=sys.stderr)
    else:
        l1_set = title_mod.load_title_dataset(args.l1_train, args.l1)
        l2_set = title_mod.load_title_dataset(args.l2_test, args.l2)
        l2_tok = None
        l1_tok = None
        if args.tokens:
            boundaries = [b for _, b in overlap_mod.load_token_sidecar(args.tokens)]
            l2_tok = overlap_mod.sidecar_tokenizer(boundaries)
        if args.l1_tokens:
            boundaries = [b for _, b in overlap_mod.load_token_sidecar(args.l1_tokens)]
            l1_tok = overlap_mod.sidecar_tokenizer(boundaries)
        report = overlap_mod.title_word_overlap(l1_set, l2_set, tokenizer=l2_tok,
                                                l1_tokenizer=l1_tok, stopwords=stopwords)
    l1_name = args.l1 or Path(args.l1_train).stem
    l2_name = args.l2 or Path(args.l2_test).stem
    _emit(_overlap_record(l1_name, l2_name, report), args.out)
    return 0


def _require(args, flag: str, rule: str):
    if getattr(args, flag.strip("-").replace("-", "_")) is None:
        raise UsageError(f"{flag} is required for rule {rule}")


def _cmd_perturb(args) -> int:
    stream = SeedStream(args.seed)
    stopwords = _load_stopwords(args.stopwords)
    inputs = {"l2_test": args.l2_test}

    if args.task == "title":
        if args.rule != "p4":
            raise UsageError("title task supports only rule p4")
        _require(args, "--l1-train", "p4")
        dataset = title_mod.load_title_dataset(args.l2_test)
        l1_set = title_mod.load_title_dataset(args.l1_train)
        inputs["l1_train"] = args.l1_train
        table = None
        if args.mode == "cosine":
            _require(args, "--embeddings", "p4")
            table = load_table(args.embeddings)
            inputs["embeddings"] = args.embeddings
        if args.stopwords:
            inputs["stopwords"] = args.stopwords
        perturbed, manifest = perturb_mod.perturb_title(
            dataset, l1_set, stream, table, stopwords, args.mode)
        output_text = title_mod.serialize_title_dataset(perturbed)
    else:
        l2_corpus = _load_corpus(args.l2_test, args.lang)
        l1_corpus = None
        lexicon = None
        table = None
        if args.rule in ("p1", "p2"):
            _require(args, "--lexicon", args.rule)
            lexicon = lexicon_mod.load_lexicon(args.lexicon)
            inputs["lexicon"] = args.lexicon
        if args.rule in ("p3", "p4", "p5"):
            _require(args, "--l1-train", args.rule)
            l1_corpus = _load_corpus(args.l1_train, args.l1)
            inputs["l1_train"] = args.l1_train
        if args.rule in ("p4", "p5") and args.mode == "cosine":
            _require(args, "--embeddings", args.rule)
            table = load_table(args.embeddings)
            inputs["embeddings"] = args.embeddings
        if args.stopwords:
            inputs["stopwords"] = args.stopwords

        if args.rule == "p1":
            perturbed, manifest = perturb_mod.perturb_p1(l2_corpus, lexicon, stream)
        elif args.rule == "p2":
            perturbed, manifest = perturb_mod.perturb_p2(l2_corpus, lexicon, stream)
        elif args.rule == "p3":
            perturbed, manifest = perturb_mod.perturb_p3(
                l2_corpus, l1_corpus, stream,
                redraw_per_occurrence=args.redraw_per_occurrence)
        elif args.rule == "p4":
            perturbed, manifest = perturb_mod.perturb_p4(
                l2_corpus, l1_corpus, stream, table, stopwords, args.mode)
        else:
            perturbed, manifest = perturb_mod.perturb_p5(
                l2_corpus, l1_corpus, stream, table, stopwords, args.mode)
        output_text = corpus_mod.serialize_conll(perturbed)

    manifest = manifest.with_inputs(_digests(inputs))
    atomic_write_text(args.out, output_text)
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    atomic_write_text(manifest_path,
                      json.dumps(manifest.to_dict(), indent=2, sort_keys=True,
                                 ensure_ascii=False) + "\n")
    print(f"{len(manifest.records)} replacement(s), skipped={dict(manifest.skipped)}",
          file=sys.stderr)
    return 0


def _cmd_build_titles(args) -> int:
    records = title_mod.read_article_records(args.infile)
    pages = title_mod.extract_sections(records)
    dataset = title_mod.build_examples(pages, SeedStream(args.seed),
                                       language=args.lang, cap=args.cap)
    atomic_write_text(args.out, title_mod.serialize_title_dataset(dataset))
    summary = {"seed": args.seed, "language": args.lang, "examples": len(dataset),
               "cap": args.cap, "inputs": _digests({"articles": args.infile})}
    atomic_write_text(f"{args.out}.manifest.json",
                      json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"built {len(dataset)} examples", file=sys.stderr)
    return 0


def _cmd_split(args) -> int:
    dataset = title_mod.load_title_dataset(args.infile, args.lang)
    train, test = title_mod.split(dataset, SeedStream(args.seed), args.ratio,
                                  group_by_page=args.group_by_page)
    atomic_write_text(args.train, title_mod.serialize_title_dataset(train))
    atomic_write_text(args.test, title_mod.serialize_title_dataset(test))
    summary = {"seed": args.seed, "ratio": args.ratio, "group_by_page": args.group_by_page,
               "train_examples": len(train), "test_examples": len(test),
               "inputs": _digests({"dataset": args.infile})}
    atomic_write_text(f"{args.train}.manifest.json",
                      json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def _report_to_dict(report: score_mod.ScoreReport) -> dict:
    out = {"task": report.task, "n_items": report.n_items}
    if report.macro_f1 is not None:
        out["macro_f1"] = report.macro_f1
        out["per_class_f1"] = report.per_class_f1
        out["entity_f1"] = report.entity_f1
    if report.accuracy is not None:
        out["accuracy"] = report.accuracy
    return out


def _cmd_score(args) -> int:
    if args.task == "ner":
        gold = _load_corpus(args.gold)
        with open(args.pred, encoding="utf-8") as fh:
            predicted = score_mod.parse_tag_file(fh)
        report = score_mod.score_ner(gold, predicted)
    else:
        gold = title_mod.load_title_dataset(args.gold)
        with open(args.pred, encoding="utf-8") as fh:
            predictions = score_mod.parse_prediction_indices(fh)
        report = score_mod.score_title(gold, predictions)
    _emit(json.dumps(_report_to_dict(report), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_stats(args) -> int:
    with open(args.results, encoding="utf-8") as fh:
        rows = score_mod.read_results_csv(fh)
    table = score_mod.significance_table(rows)
    _emit(score_mod.format_significance_csv(table), args.out)
    return 0


def _read_pair_scores(path: str) -> dict[str, float]:
    scores = {}
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.lower().startswith("pair,"):
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise DataError(f"{path}:{number}: expected 'pair,score'")
            scores[fields[0]] = float(fields[1])
    return scores


def _read_overlap_records(path: str) -> dict[str, float]:
    overlaps = {}
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.lower().startswith("l1,"):
                continue
            fields = line.split(",")
            if len(fields) != 5:
                raise DataError(f"{path}:{number}: expected 'l1,l2,shared,total,percent'")
            overlaps[f"{fields[0]}-{fields[1]}"] = float(fields[4])
    return overlaps


def _cmd_report(args) -> int:
    overlaps = _read_overlap_records(args.overlaps)
    base = _read_pair_scores(args.base)
    perturbed = _read_pair_scores(args.perturbed)
    rows = score_mod.delta_overlap_report(overlaps, base, perturbed)
    _emit(score_mod.format_delta_overlap_csv(rows), args.out)
    return 0


# --- pipeline -----------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    """Flat `key = value` config; blank lines and # comments are ignored."""
    config = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{number}: expected 'key = value'")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


def _cmd_pipeline(args) -> int:
    config = read_config(args.config)

    def need(key: str) -> str:
        if key not in config or not config[key]:
            raise UsageError(f"config is missing required key {key!r}")
        return config[key]

    seed = int(need("seed"))
    l1, l2 = need("l1"), need("l2")
    out_dir = Path(need("out_dir"))
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_dir = out_dir / "manifests"
    stream = SeedStream(seed)

    def stage(name, fn):
        try:
            return fn()
        except UsageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc

    stopwords = stage("load/stopwords",
                      lambda: _load_stopwords(config.get("stopwords")))
    l1_corpus = stage("load/l1-train", lambda: _load_corpus(need("l1_train"), l1))
    l2_corpus = stage("load/l2-test", lambda: _load_corpus(need("l2_test"), l2))
    names = stage("load/given-names", lambda: lexicon_mod.load_lexicon(need("given_names")))
    places = stage("load/places", lambda: lexicon_mod.load_lexicon(need("places")))

    title_l1 = title_l2 = None
    if config.get("title_l1_train") and config.get("title_l2_test"):
        title_l1 = stage("load/title-l1",
                         lambda: title_mod.load_title_dataset(config["title_l1_train"], l1))
        title_l2 = stage("load/title-l2",
                         lambda: title_mod.load_title_dataset(config["title_l2_test"], l2))

    outputs: dict[str, Path] = {}

    def write_output(name: str, filename: str, text: str, manifest=None):
        path = out_dir / filename
        atomic_write_text(path, text)
        outputs[name] = path
        if manifest is not None:
            atomic_write_text(manifest_dir / f"{name}.json",
                              json.dumps(manifest.to_dict(), indent=2, sort_keys=True,
                                         ensure_ascii=False) + "\n")

    # overlap report
    overlap_lines = ["task,l1,l2,shared,total,percent"]
    ner_report = stage("overlap/ner",
                       lambda: overlap_mod.ner_word_overlap(l1_corpus, l2_corpus))
    overlap_lines.append(f"ner,{l1},{l2},{ner_report.shared_count},"
                         f"{ner_report.total_count},{ner_report.percent:.2f}")
    if title_l1 is not None:
        title_report = stage("overlap/title",
                             lambda: overlap_mod.title_word_overlap(
                                 title_l1, title_l2, stopwords=stopwords))
        overlap_lines.append(f"title,{l1},{l2},{title_report.shared_count},"
                             f"{title_report.total_count},{title_report.percent:.2f}")
    write_output("overlap", "overlap.csv", "\n".join(overlap_lines) + "\n")

    # NER perturbations
    corpus_inputs = _digests({"l1_train": need("l1_train"), "l2_test": need("l2_test")})

    def run_ner_rule(name, fn):
        perturbed, manifest = stage(f"perturb/{name}", fn)
        write_output(name, f"{name}.conll", corpus_mod.serialize_conll(perturbed),
                     manifest.with_inputs(corpus_inputs))

    run_ner_rule("p1", lambda: perturb_mod.perturb_p1(l2_corpus, names, stream))
    run_ner_rule("p2", lambda: perturb_mod.perturb_p2(l2_corpus, places, stream))
    run_ner_rule("p3", lambda: perturb_mod.perturb_p3(l2_corpus, l1_corpus, stream))

    def load_embeddings():
        if not config.get("embeddings"):
            raise DataError("config is missing key 'embeddings'")
        return load_table(config["embeddings"])

    table = stage("perturb/p4", load_embeddings)
    run_ner_rule("p4", lambda: perturb_mod.perturb_p4(
        l2_corpus, l1_corpus, stream, table, stopwords, "cosine"))
    run_ner_rule("p5", lambda: perturb_mod.perturb_p5(
        l2_corpus, l1_corpus, stream, table, stopwords, "cosine"))

    # title perturbation, both substitution modes
    if title_l2 is not None:
        for mode in ("cosine", "random"):
            name = f"title_{mode}"
            perturbed, manifest = stage(f"perturb/title-{mode}",
                                        lambda m=mode: perturb_mod.perturb_title(
                                            title_l2, title_l1, stream.child(m),
                                            table, stopwords, m))
            write_output(name, f"{name}.jsonl",
                         title_mod.serialize_title_dataset(perturbed),
                         manifest.with_inputs(_digests({
                             "title_l1_train": config["title_l1_train"],
                             "title_l2_test": config["title_l2_test"]})))

    summary = {
        "seed": seed,
        "pair": f"{l1}-{l2}",
        "inputs": corpus_inputs,
        "outputs": {name: {"path": str(path), "sha256": sha256_file(path)}
                    for name, path in sorted(outputs.items())},
    }
    atomic_write_text(out_dir / "summary.json",
                      json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(outputs)} artifact(s) + summary.json to {out_dir}", file=sys.stderr)
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="xlrobust",
                     description="Adversarial perturbation, overlap, and scoring toolkit "
                                 "for cross-lingual NER and section-title experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check or repair BIO tagging in a CoNLL file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=["strict", "repair"], default="repair")
    p.add_argument("--lang", default="")
    p.add_argument("--out", help="write the (repaired) corpus here")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("fetch-lexicon", help="scrape a wiki category into a lexicon file")
    p.add_argument("--lang", required=True, help="ISO 639 code stored in the lexicon")
    p.add_argument("--kind", choices=[k.value for k in lexicon_mod.LexiconKind], required=True)
    p.add_argument("--endpoint", default=lexicon_mod.DEFAULT_ENDPOINT)
    p.add_argument("--page-limit", type=int, default=100)
    p.add_argument("--category", help="full category name, overriding the template")
    p.add_argument("--language-name", help="language name used in the category template")
    p.add_argument("--cache-dir", help="cache API responses here for offline reruns")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_fetch_lexicon)

    p = sub.add_parser("overlap", help="L1-train/L2-test vocabulary overlap record")
    p.add_argument("--task", choices=["ner", "title"], required=True)
    p.add_argument("--l1-train", required=True)
    p.add_argument("--l2-test", required=True)
    p.add_argument("--l1", default="", help="L1 language code for the output record")
    p.add_argument("--l2", default="", help="L2 language code for the output record")
    p.add_argument("--stopwords")
    p.add_argument("--tokens", help="token-count sidecar for the L2-test texts")
    p.add_argument("--l1-tokens", help="token-count sidecar for the L1-train texts")
    p.add_argument("--all-token-denominator", action="store_true",
                   help="divide by all L2 tokens instead of entity tokens only")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_overlap)

    p = sub.add_parser("perturb", help="apply one perturbation rule to a test set")
    p.add_argument("--rule", choices=["p1", "p2", "p3", "p4", "p5"], required=True)
    p.add_argument("--task", choices=["ner", "title"], default="ner")
    p.add_argument("--mode", choices=["cosine", "random"], default="cosine")
    p.add_argument("--l2-test", required=True)
    p.add_argument("--l1-train")
    p.add_argument("--lexicon")
    p.add_argument("--embeddings")
    p.add_argument("--stopwords")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lang", default="", help="L2 language code")
    p.add_argument("--l1", default="", help="L1 language code")
    p.add_argument("--redraw-per-occurrence", action="store_true",
                   help="p3: draw a fresh replacement at every occurrence")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    p.set_defaults(handler=_cmd_perturb)

    p = sub.add_parser("build-titles", help="build a section-title dataset from articles")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--cap", type=int, default=title_mod.EXAMPLE_CAP)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_build_titles)

    p = sub.add_parser("split", help="shuffle-split a title dataset into train/test")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lang", default="")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--group-by-page", action="store_true",
                   help="keep all of a page's examples on one side of the split")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("score", help="score a prediction file against gold data")
    p.add_argument("--task", choices=["ner", "title"], required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("stats", help="significance table from a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("report", help="join overlap percentages with score deltas")
    p.add_argument("--overlaps", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--perturbed", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_report)

    p = sub.add_parser("pipeline", help="run every stage for one language pair")
    p.add_argument("config")
    p.set_defaults(handler=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"pipeline aborted at {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
