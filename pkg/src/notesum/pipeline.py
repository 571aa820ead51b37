"""End-to-end run: synth -> pair -> pseudolabel -> train -> summarize -> evaluate.

Every stage writes its artifacts under one output directory. ``manifest.json``
records the configuration hash and the sha256 of each stage's inputs and
outputs; it is byte-identical across reruns of the same configuration. Wall
times go to ``timings.json`` so the manifest stays reproducible.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .baselines import mmr_select, most_entity, random_select, tfidf_select, tfidf_weights
from .corpus import SIX_MONTHS_DAYS, dumps_line, ingest, pair_notes, pair_record, write_corpus
from .embeddings import EmbeddingTable
from .entities import EntityLexicon, LexiconExtractor, compute_idf
from .errors import ConfigurationError, NotesumError, StageError
from .neural import ModelConfig, infer_summary, init_params, save_checkpoint, train
from .pseudolabel import DEFAULT_BUDGET, EXACT_CAP, build_training_set
from .rouge import evaluate, format_table
from .summary import SummaryResult, write_summaries
from .synth import default_lexicon, synth_embeddings, synth_generate

log = logging.getLogger(__name__)

STAGES = ("synth", "pair", "pseudolabel", "train", "summarize", "evaluate")

# evaluation rows, in table order
METHOD_NAMES = {
    "most-entity": "Most-Entity",
    "tfidf": "TF-IDF",
    "tfidf-mmr": "TF-IDF + MMR",
    "random": "Random",
    "model-no-novelty": "Ours w/o novelty",
    "model-no-position": "Ours w/o position",
    "model": "Ours",
}
ABLATIONS = {"model-no-novelty": {"use_novelty": False}, "model-no-position": {"use_position": False}}


@dataclass
class RunConfig:
    out_dir: str = "run"
    seed: int = 0
    # corpus: read from ``corpus`` when set, otherwise generated
    corpus: str | None = None
    patients: int = 30
    notes_per_patient: int = 3
    lexicon: str | None = None
    embeddings: str | None = None
    fallback_seed: int | None = None
    # generated corpora get category-structured vectors unless embeddings are given
    synth_embeddings: bool = True
    budget: int = DEFAULT_BUDGET
    min_gap_days: int = SIX_MONTHS_DAYS
    cap: int = EXACT_CAP
    epochs: int = 50
    batch_size: int = 16
    lr: float = 1e-3
    hidden_dim: int = 200
    test_fraction: float = 1 / 3
    ablations: bool = True
    mmr_penalty: float = 1.0

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {unknown}")
        return cls(**data)

    def experiment(self) -> dict:
        """Everything that determines the outputs (the output location does not)."""
        d = asdict(self)
        d.pop("out_dir")
        return d

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.experiment(), sort_keys=True).encode()).hexdigest()

    def check(self) -> None:
        for name in ("corpus", "lexicon", "embeddings"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigurationError(f"{name} path does not exist: {path}")
        if self.budget < 1:
            raise ConfigurationError("budget must be >= 1")
        if self.epochs < 0 or self.batch_size < 1 or self.hidden_dim < 1:
            raise ConfigurationError("epochs must be >= 0, batch size and hidden dim >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError("test_fraction must lie strictly between 0 and 1")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_lexicon(path) -> EntityLexicon:
    return default_lexicon() if path is None else EntityLexicon.load(path)


def load_table(path, fallback_seed: int | None) -> EmbeddingTable:
    if path is None:
        return EmbeddingTable(fallback_seed=fallback_seed)
    return EmbeddingTable.load(path, fallback_seed)


def split_patients(patient_ids, test_fraction: float, seed: int) -> tuple[list[str], list[str]]:
    """Seeded patient-level split; both sides non-empty when there are >= 2 patients."""
    ids = sorted(patient_ids)
    order = np.random.default_rng([seed, 7]).permutation(len(ids))
    n_test = min(len(ids) - 1, max(1, int(round(test_fraction * len(ids)))))
    test = sorted(ids[i] for i in order[:n_test])
    train_ids = sorted(ids[i] for i in order[n_test:])
    return train_ids, test


def _write_lines(path, records) -> None:
    Path(path).write_text("".join(dumps_line(r) + "\n" for r in records), encoding="utf-8")


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class _Run:
    def __init__(self, config: RunConfig):
        self.cfg = config
        self.out = Path(config.out_dir)
        self.stages: list[dict] = []
        self.timings: dict[str, float] = {}
        self.state: dict = {}

    def rel(self, path) -> str:
        return Path(path).relative_to(self.out).as_posix()

    def stage(self, name, fn):
        start = time.perf_counter()
        entry = {"name": name, "status": "running"}
        self.stages.append(entry)
        try:
            inputs, outputs, counts = fn()
        except NotesumError as exc:
            entry["status"] = "failed"
            entry["error"] = str(exc)
            raise StageError(name, exc) from exc
        entry.update(status="completed", counts=counts,
                     inputs={k: sha256_file(v) for k, v in sorted(inputs.items())},
                     outputs={self.rel(p): sha256_file(p) for p in sorted(outputs)})
        self.timings[name] = time.perf_counter() - start
        log.info("stage %s done in %.1fs", name, self.timings[name])

    # stages

    def synth(self):
        cfg = self.cfg
        path = self.out / "corpus.jsonl"
        if cfg.corpus is not None:
            corpus = ingest(cfg.corpus)
            inputs = {"corpus": cfg.corpus}
        else:
            corpus = synth_generate(cfg.seed, cfg.patients, cfg.notes_per_patient)
            inputs = {}
        write_corpus(corpus, path)
        outputs = [path]
        self.state["corpus"] = corpus
        if cfg.corpus is None and cfg.embeddings is None and cfg.synth_embeddings:
            words = {w for n in corpus for s in n.sentences for w in s.tokens}
            table = synth_embeddings(words, self.fallback_seed, load_lexicon(cfg.lexicon))
            emb_path = self.out / "embeddings.txt"
            table.save(emb_path)
            outputs.append(emb_path)
            self.state["table"] = table
        return inputs, outputs, {"patients": len(corpus.patients), "notes": len(corpus)}

    def pair(self):
        pairs = pair_notes(self.state["corpus"], self.cfg.min_gap_days)
        path = self.out / "pairs.jsonl"
        _write_lines(path, [pair_record(p) for p in pairs])
        self.state["pairs"] = pairs
        return {}, [path], {"pairs": len(pairs)}

    def pseudolabel(self):
        cfg, corpus = self.cfg, self.state["corpus"]
        lexicon = load_lexicon(cfg.lexicon)
        table = self.state.get("table") or load_table(cfg.embeddings, self.fallback_seed)
        idf = compute_idf(corpus, lexicon)
        ts = build_training_set(corpus, self.state["pairs"], cfg.budget, lexicon, table, idf, cfg.cap)
        path = self.out / "labels.jsonl"
        ts.save(path)
        self.state.update(lexicon=lexicon, table=table, labels=ts)
        solvers = {}
        for ex in ts:
            solvers[ex.solver] = solvers.get(ex.solver, 0) + 1
        counts = {"examples": len(ts), "dropped": dict(ts.dropped), "solvers": solvers}
        return self._resource_inputs(), [path], counts

    def train(self):
        cfg, corpus, ts = self.cfg, self.state["corpus"], self.state["labels"]
        train_ids, test_ids = split_patients(corpus.patients, cfg.test_fraction, cfg.seed)
        train_set = ts.subset(train_ids)
        split_path = self.out / "split.json"
        _write_json(split_path, {"train": train_ids, "test": test_ids})
        table = self.state["table"]
        words = {w for n in corpus for s in n.sentences for w in s.tokens}
        base = ModelConfig(emb_dim=table.dim, hidden_dim=cfg.hidden_dim,
                           max_positions=max(len(n) for n in corpus), seed=cfg.seed)
        variants = {"model": {}}
        if cfg.ablations:
            variants.update(ABLATIONS)
        outputs, curves, models = [split_path], {}, {}
        for name, flags in variants.items():
            params = init_params(base, words, table).with_flags(**flags)
            params, curve = train(params, train_set, cfg.epochs, cfg.batch_size, cfg.seed, cfg.lr)
            path = self.out / f"{name}.ckpt"
            save_checkpoint(params, path, {"fallback_seed": self.fallback_seed})
            outputs.append(path)
            curves[name] = curve
            models[name] = params
        curve_path = self.out / "loss_curves.json"
        _write_json(curve_path, curves)
        outputs.append(curve_path)
        self.state.update(models=models, test_ids=test_ids)
        return {}, outputs, {"train_patients": len(train_ids), "test_patients": len(test_ids),
                             "train_examples": len(train_set)}

    def summarize(self):
        cfg, corpus = self.cfg, self.state["corpus"]
        test = self.state["labels"].subset(self.state["test_ids"])
        notes = list({ex.note.key: ex.note for ex in test}.values())
        lexicon, tw = self.state["lexicon"], tfidf_weights(corpus)
        extract = LexiconExtractor(lexicon)
        rng = np.random.default_rng([cfg.seed, 1])
        out_dir = self.out / "summaries"
        out_dir.mkdir(exist_ok=True)
        results = {
            "most-entity": [most_entity(n, extract(n), cfg.budget) for n in notes],
            "tfidf": [tfidf_select(n, tw, cfg.budget) for n in notes],
            "tfidf-mmr": [mmr_select(n, tw, cfg.budget, cfg.mmr_penalty) for n in notes],
            "random": [random_select(n, cfg.budget, rng) for n in notes],
        }
        for name, params in self.state["models"].items():
            results[name] = [infer_summary(params, n, cfg.budget, name) for n in notes]
        outputs = []
        for name, rows in results.items():
            path = out_dir / f"{name}.jsonl"
            write_summaries(rows, path)
            outputs.append(path)
        refs = [SummaryResult(ex.note.note_id, tuple(int(i) for i in np.flatnonzero(ex.y)),
                              int(np.dot(ex.y, ex.note.lengths)), ex.solver, ex.note.patient_id)
                for ex in test]
        ref_path = self.out / "references.jsonl"
        write_summaries(refs, ref_path)
        outputs.append(ref_path)
        self.state.update(results=results, references=refs)
        return {}, outputs, {"notes": len(notes), "references": len(refs), "methods": len(results)}

    def evaluate(self):
        corpus, refs, results = self.state["corpus"], self.state["references"], self.state["results"]
        reports = [evaluate(results[m], refs, corpus, METHOD_NAMES[m])
                   for m in METHOD_NAMES if m in results]
        table_path = self.out / "evaluation.txt"
        table_path.write_text(format_table(reports) + "\n", encoding="utf-8")
        json_path = self.out / "evaluation.json"
        _write_json(json_path, {"rows": [r.row() for r in reports]})
        self.state["reports"] = reports
        return {}, [table_path, json_path], {"rows": len(reports)}

    @property
    def fallback_seed(self) -> int:
        return self.cfg.seed if self.cfg.fallback_seed is None else self.cfg.fallback_seed

    def _resource_inputs(self) -> dict:
        return {k: getattr(self.cfg, k) for k in ("lexicon", "embeddings") if getattr(self.cfg, k)}

    def manifest(self) -> dict:
        return {"config": self.cfg.experiment(), "config_hash": self.cfg.config_hash(),
                "seed": self.cfg.seed, "stages": self.stages,
                "complete": all(s["status"] == "completed" for s in self.stages)
                and len(self.stages) == len(STAGES)}


@dataclass
class PipelineResult:
    manifest: dict
    reports: list
    out_dir: Path

    @property
    def table(self) -> str:
        return format_table(self.reports)


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Run every stage in order. A failing stage leaves a manifest marked incomplete."""
    config.check()
    run = _Run(config)
    run.out.mkdir(parents=True, exist_ok=True)
    try:
        for name in STAGES:
            run.stage(name, getattr(run, name))
    finally:
        _write_json(run.out / "manifest.json", run.manifest())
        _write_json(run.out / "timings.json", {k: round(v, 3) for k, v in run.timings.items()})
    return PipelineResult(run.manifest(), run.state["reports"], run.out)
