"""Command-line entry point: ``notesum <command> [options]``.

Options may also come from a JSON file given with ``--config``; flags on the
command line override it. Exit codes: 0 ok, 1 usage, 2 data, 3 numerical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import mmr_select, most_entity, random_select, tfidf_select, tfidf_weights
from .corpus import (
    SIX_MONTHS_DAYS, dumps_line, ingest, pair_notes, pair_record, serialize, write_corpus,
)
from .entities import LexiconExtractor, compute_idf, entity_str, mention_record
from .errors import ConfigurationError, NotesumError, UsageError
from .neural import ModelConfig, infer_summary, init_params, load_checkpoint, save_checkpoint, train
from .pipeline import RunConfig, load_lexicon, load_table, run_pipeline
from .pseudolabel import DEFAULT_BUDGET, EXACT_CAP, build_training_set, load_training_set
from .rouge import evaluate, format_table
from .summary import read_summaries, write_summaries
from .synth import synth_embeddings, synth_generate

log = logging.getLogger("notesum")

METHODS = ("most-entity", "tfidf", "tfidf-mmr", "model", "random")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _write_records(path, records) -> None:
    text = "".join(dumps_line(r) + "\n" for r in records)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _fallback_seed(args) -> int:
    return args.seed if args.fallback_seed is None else args.fallback_seed


def cmd_synth(args):
    corpus = synth_generate(args.seed, args.patients, args.notes)
    if args.out is None or args.out == "-":
        sys.stdout.write(serialize(corpus))
    else:
        write_corpus(corpus, args.out)
    if args.embeddings_out:
        words = {w for n in corpus for s in n.sentences for w in s.tokens}
        synth_embeddings(words, args.seed).save(args.embeddings_out)
    log.info("wrote %d notes for %d patients", len(corpus), len(corpus.patients))


def cmd_pair(args):
    pairs = pair_notes(ingest(args.corpus), args.min_gap_days)
    _write_records(args.out, [pair_record(p) for p in pairs])
    log.info("%d pairs", len(pairs))


def cmd_entities(args):
    corpus = ingest(args.corpus)
    lexicon = load_lexicon(args.lexicon)
    extract = LexiconExtractor(lexicon)
    records = [{"patient_id": n.patient_id, "note_id": n.note_id,
                "mentions": [mention_record(m) for m in extract(n)]} for n in corpus]
    _write_records(args.out, records)
    if args.idf_out:
        idf = compute_idf(corpus, lexicon)
        Path(args.idf_out).write_text(json.dumps(
            {"note_count": idf.note_count,
             "weights": {entity_str(e): w for e, w in sorted(idf.weights.items())}},
            indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_pseudolabel(args):
    corpus = ingest(args.corpus)
    lexicon = load_lexicon(args.lexicon)
    table = load_table(args.embeddings, _fallback_seed(args))
    ts = build_training_set(corpus, pair_notes(corpus, args.min_gap_days), args.budget,
                            lexicon, table, compute_idf(corpus, lexicon), args.cap)
    _write_records(args.out, [e.to_record() for e in ts])
    log.info("%d examples, dropped %s", len(ts), ts.dropped)


def cmd_train(args):
    if args.out is None:
        raise UsageError("train needs --out for the checkpoint")
    corpus = ingest(args.corpus)
    ts = load_training_set(args.labels, corpus)
    seed = _fallback_seed(args)
    table = load_table(args.embeddings, seed)
    cfg = ModelConfig(emb_dim=table.dim, hidden_dim=args.hidden_dim,
                      max_positions=max(len(n) for n in corpus),
                      use_novelty=not args.no_novelty, use_position=not args.no_position,
                      seed=args.seed)
    params = init_params(cfg, {w for n in corpus for s in n.sentences for w in s.tokens}, table)
    params, curve = train(params, ts, args.epochs, args.batch, args.seed, args.lr)
    save_checkpoint(params, args.out, {"fallback_seed": seed, "loss_curve": curve})


def cmd_summarize(args):
    corpus = ingest(args.corpus)
    notes = corpus.notes
    if args.notes_from:
        keep = {r.key for r in read_summaries(args.notes_from)}
        notes = [n for n in notes if n.key in keep]
    budget = args.budget
    if args.method == "model":
        if args.model is None:
            raise UsageError("--method model needs --model")
        header_seed = _checkpoint_seed(args.model)
        table = load_table(args.embeddings, header_seed if args.fallback_seed is None else args.fallback_seed)
        params = load_checkpoint(args.model, table)
        rows = [infer_summary(params, n, budget) for n in notes]
    elif args.method == "most-entity":
        extract = LexiconExtractor(load_lexicon(args.lexicon))
        rows = [most_entity(n, extract(n), budget) for n in notes]
    elif args.method == "random":
        rng = np.random.default_rng(args.seed)
        rows = [random_select(n, budget, rng) for n in notes]
    else:
        tw = tfidf_weights(corpus)
        rows = ([tfidf_select(n, tw, budget) for n in notes] if args.method == "tfidf"
                else [mmr_select(n, tw, budget, args.mmr_penalty) for n in notes])
    _write_records(args.out, [r.to_record() for r in rows])


def _checkpoint_seed(path):
    import zipfile
    try:
        with zipfile.ZipFile(path) as zf:
            return json.loads(zf.read("header.json"))["extra"].get("fallback_seed")
    except (OSError, zipfile.BadZipFile, KeyError, json.JSONDecodeError):
        return None


def cmd_evaluate(args):
    corpus = ingest(args.corpus)
    refs = read_summaries(args.references)
    reports = []
    for path in args.summaries:
        rows = read_summaries(path)
        reports.append(evaluate(rows, refs, corpus, rows[0].method if rows else Path(path).stem))
    print(format_table(reports))
    if args.out:
        Path(args.out).write_text(json.dumps({"rows": [r.row() for r in reports]}, indent=2) + "\n",
                                  encoding="utf-8")


def cmd_pipeline(args):
    values = {k: v for k, v in vars(args).items() if k in _PIPELINE_KEYS and v is not None}
    if "out" in values:
        values["out_dir"] = values.pop("out")
    if args.no_ablations:
        values["ablations"] = False
    if args.hashed_embeddings:
        values["synth_embeddings"] = False
    result = run_pipeline(RunConfig.from_dict(values))
    print(result.table)
    log.info("artifacts in %s", result.out_dir)


_PIPELINE_KEYS = {"out", "seed", "corpus", "patients", "notes_per_patient", "lexicon", "embeddings",
                  "fallback_seed", "budget", "min_gap_days", "cap", "epochs", "batch_size", "lr",
                  "hidden_dim", "test_fraction", "mmr_penalty"}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="word budget L")
    common.add_argument("--out", help="output path ('-' or omitted: stdout where applicable)")
    common.add_argument("--config", help="JSON file of option defaults")
    common.add_argument("-v", "--verbose", action="store_true")

    resources = _Parser(add_help=False)
    resources.add_argument("--lexicon", help="entity lexicon, one entry per line (default: built-in)")
    resources.add_argument("--embeddings", help="word vectors in '<n> <dim>' text format")
    resources.add_argument("--fallback-seed", type=int,
                           help="seed for hashed vectors of unknown words (default: --seed)")

    parser = _Parser(prog="notesum", description="Extractive summarization of earlier clinical notes.")
    parser.add_argument("--version", action="version", version=f"notesum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--patients", type=int, default=20)
    p.add_argument("--notes", type=int, default=3)
    p.add_argument("--embeddings-out", help="also write category-structured vectors for the corpus")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pair", parents=[common], help="pair notes at least six months apart")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-gap-days", type=int, default=SIX_MONTHS_DAYS)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("entities", parents=[common, resources], help="extract entity mentions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--idf-out", help="also write IDF weights as JSON")
    p.set_defaults(func=cmd_entities)

    p = sub.add_parser("pseudolabel", parents=[common, resources], help="solve coverage labels per pair")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-gap-days", type=int, default=SIX_MONTHS_DAYS)
    p.add_argument("--cap", type=int, default=EXACT_CAP, help="largest note solved exactly")
    p.set_defaults(func=cmd_pseudolabel)

    p = sub.add_parser("train", parents=[common, resources], help="train the sentence scorer")
    p.add_argument("--labels", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden-dim", type=int, default=200)
    p.add_argument("--no-novelty", action="store_true")
    p.add_argument("--no-position", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("summarize", parents=[common, resources], help="select sentences under the budget")
    p.add_argument("--corpus", required=True)
    p.add_argument("--method", choices=METHODS, default="model")
    p.add_argument("--model", help="checkpoint for --method model")
    p.add_argument("--notes-from", help="only summarize notes named in this summary or label file")
    p.add_argument("--mmr-penalty", type=float, default=1.0)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", parents=[common], help="ROUGE table against references")
    p.add_argument("--summaries", required=True, nargs="+")
    p.add_argument("--references", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common, resources], help="run every stage end to end")
    p.add_argument("--corpus", help="input corpus (default: generate one)")
    p.add_argument("--patients", type=int)
    p.add_argument("--notes-per-patient", type=int)
    p.add_argument("--min-gap-days", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--mmr-penalty", type=float)
    p.add_argument("--no-ablations", action="store_true")
    p.add_argument("--hashed-embeddings", action="store_true",
                   help="use plain hashed vectors for a generated corpus")
    p.set_defaults(func=cmd_pipeline)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(defaults, dict):
            raise ConfigurationError("config file must hold a JSON object")
        defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
        unknown = sorted(set(defaults) - set(vars(args)))
        if unknown:
            raise ConfigurationError(f"unknown config keys for {args.command}: {unknown}")
        # re-parse so explicit flags win over the file
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.budget < 1:
            raise UsageError("--budget must be >= 1")
        args.func(args)
    except NotesumError as exc:
        print(f"notesum: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"notesum: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
