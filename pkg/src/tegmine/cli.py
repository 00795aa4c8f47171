"""Pipeline driver: one entry point for every stage.

Subcommands: build-teg, discover, train, eval, annotate-serve, mine-meta,
export.  Option precedence is flags > ``--config`` key-value file > built-in
defaults, where the defaults are the pipeline constants (k = r_min = 5,
relevance 1000, significance 15, entity support 0.6, top-100 premises per
hypothesis).  Every artifact gets a ``<name>.manifest`` sidecar pinning the
config, input digests and seed; identical manifests mean byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from pathlib import Path

from tegmine import __version__
from tegmine.config import ConfigError, load_kv_file

log = logging.getLogger(__name__)

DATA_DIR_ENV = "TEGMINE_DATA_DIR"
STORE_NAME = "teg.bin"

SCORER_NAMES = (
    "lemma",
    "always-yes",
    "sherlock",
    "avgcos",
    "typedrel",
    "untypedrel",
    "weedsprec",
    "invcl",
    "rules",
)


class StageError(RuntimeError):
    """A stage failed for an expected reason (bad input, missing file...)."""


def _opt(args: argparse.Namespace, key: str, default, cast=str):
    """Resolve one option: flag > config-file entry > default."""
    value = getattr(args, key.replace("-", "_"))
    if value is not None:
        return value
    pairs = getattr(args, "_config_pairs", {})
    if key in pairs:
        try:
            return cast(pairs[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc
    return default


def _store_path(teg: str) -> Path:
    """``--teg`` takes the build-teg output directory or the store file itself."""
    p = Path(teg)
    if p.is_dir():
        p = p / STORE_NAME
    if not p.exists():
        raise StageError(f"no TEG store at {p} (run build-teg first)")
    return p


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# --- stages ------------------------------------------------------------------


def cmd_build_teg(args) -> int:
    from tegmine.manifest import collect
    from tegmine.teg import DEFAULT_K, DEFAULT_R_MIN, TypeMap, export_tsv, ingest, save_store, type_all

    k = _opt(args, "k", DEFAULT_K, int)
    r_min = _opt(args, "rmin", DEFAULT_R_MIN, int)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(args.triples, encoding="utf-8") as fh:
        store, report = ingest(fh)
    tau = TypeMap.from_tsv(args.types)
    type_all(store, tau, k=k, r_min=r_min)
    save_store(store, out / STORE_NAME)
    export_tsv(store, out)
    manifest = collect("build-teg", {"k": k, "r_min": r_min}, [args.triples, args.types])
    manifest.write_beside(out / STORE_NAME)
    print(
        "%d pairs accepted (%d filtered, %d duplicates, %d malformed); "
        "%d relations, %d typed subrelations -> %s"
        % (
            report.accepted,
            report.rejected_total,
            report.duplicates,
            report.malformed,
            len(store.relations),
            len(store.typed),
            out,
        )
    )
    return 0


def cmd_discover(args) -> int:
    from tegmine.discovery import DiscoveryConfig, discover, write_candidates_tsv
    from tegmine.manifest import collect
    from tegmine.teg import load_store

    cfg = DiscoveryConfig(
        theta_relv=_opt(args, "theta-relv", 1000.0, float),
        theta_sigma=_opt(args, "theta-sigma", 15.0, float),
        theta_esr=_opt(args, "theta-esr", 0.6, float),
        r_min=_opt(args, "rmin", 5, int),
        max_premises_per_hypothesis=_opt(args, "top", 100, int),
    )
    store_path = _store_path(args.teg)
    store = load_store(store_path)
    cands = discover(store, cfg)
    write_candidates_tsv(cands, store, args.out)
    snapshot = {
        "theta_relv": cfg.theta_relv,
        "theta_sigma": cfg.theta_sigma,
        "theta_esr": cfg.theta_esr,
        "r_min": cfg.r_min,
        "top": cfg.max_premises_per_hypothesis,
    }
    collect("discover", snapshot, [store_path]).write_beside(args.out)
    print(f"{len(cands)} inference candidates -> {args.out}")
    return 0


def cmd_train(args) -> int:
    from tegmine.manifest import collect
    from tegmine.scorers.corpus import SgnsConfig, synthetic_corpus, train_sgns
    from tegmine.scorers.kge import KgeConfig, teg_triples, train_complex, train_transe
    from tegmine.teg import load_store

    if args.workers != 1:
        log.info("training is kept deterministic; forcing 1 worker (asked for %d)", args.workers)
    seed = _opt(args, "seed", 1, int)
    store_path = _store_path(args.teg)
    store = load_store(store_path)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    overrides = {"seed": seed}
    for name in ("dim", "epochs"):
        value = _opt(args, name, None, int)
        if value is not None:
            overrides[name] = value

    if args.algo == "sgns":
        cfg = SgnsConfig(**overrides)
        corpus = synthetic_corpus(store, typed=args.typed)
        table, losses = train_sgns(corpus, cfg)
        written = [out / "vectors.txt"]
        table.save_text(written[0])
        corpus_hash = _sha256_text("\n".join(corpus))
    else:
        cfg = KgeConfig(**overrides)
        triples = teg_triples(store, typed=args.typed)
        trainer = train_transe if args.algo == "transe" else train_complex
        ent, rel, losses = trainer(triples, cfg)
        written = [out / "entities.txt", out / "relations.txt"]
        ent.save_text(written[0])
        rel.save_text(written[1])
        corpus_hash = _sha256_text("\n".join("\t".join(t) for t in triples))

    snapshot = {"algo": args.algo, "typed": str(args.typed).lower(), "corpus_sha256": corpus_hash}
    snapshot.update(cfg.manifest())
    manifest = collect("train", snapshot, [store_path], seed=seed)
    for path in written:
        manifest.write_beside(path)
    final = losses[-1] if losses else float("nan")
    print(
        "%s: %d epochs, final loss %.6g; wrote %s"
        % (args.algo, len(losses), final, ", ".join(str(p) for p in written))
    )
    return 0


def _make_scorer(name: str, args):
    from tegmine.scorers.base import ConstantScorer, SherlockScorer, SumScorer
    from tegmine.scorers.inclusion import InclusionScorer, pair_features
    from tegmine.scorers.lemma import LemmaScorer
    from tegmine.scorers.rulebase import RuleBase, RuleBaseScorer
    from tegmine.scorers.vectors import AvgCosineScorer, RelationCosineScorer, VectorTable

    if "+" in name:
        first, rest = name.split("+", 1)
        return SumScorer(_make_scorer(first, args), _make_scorer(rest, args))
    if name == "lemma":
        return LemmaScorer()
    if name == "always-yes":
        return ConstantScorer(1.0)
    if name == "sherlock":
        if not args.cands:
            raise StageError("scorer 'sherlock' needs --cands (a discovery export)")
        return SherlockScorer.from_tsv(args.cands)
    if name in ("avgcos", "typedrel", "untypedrel"):
        if not args.vectors:
            raise StageError(f"scorer {name!r} needs --vectors")
        table = VectorTable.load_text(args.vectors)
        if name == "avgcos":
            return AvgCosineScorer(table)
        return RelationCosineScorer(table, typed=name == "typedrel")
    if name in ("weedsprec", "invcl"):
        if not args.teg:
            raise StageError(f"scorer {name!r} needs --teg")
        from tegmine.teg import load_store

        store = load_store(_store_path(args.teg))
        return InclusionScorer(pair_features(store, typed=args.typed), measure=name, typed=args.typed)
    if name == "rules":
        if not args.rules:
            raise StageError("scorer 'rules' needs --rules (a premise/hypothesis TSV)")
        return RuleBaseScorer(RuleBase.from_tsv(args.rules))
    raise StageError(f"unknown scorer {name!r}; expected one of {', '.join(SCORER_NAMES)}")


def cmd_eval(args) -> int:
    from tegmine.evaluation import (
        ReportRow,
        evaluate,
        load_labeled_tsv,
        load_released,
        released_data_paths,
        split_dev_test,
        tune_threshold,
        write_report,
    )
    from tegmine.manifest import collect
    from tegmine.scorers.lemma import LemmaScorer

    data = args.data or os.environ.get(DATA_DIR_ENV)
    if not data:
        raise StageError(f"--data not given and {DATA_DIR_ENV} is not set")
    data = Path(data)
    seed = _opt(args, "seed", 0, int)
    if data.is_dir():
        dev, test = load_released(data)
        inputs = list(released_data_paths(data))
    else:
        dev, test = split_dev_test(load_labeled_tsv(data), seed=seed)
        inputs = [data]
    names = [n.strip() for n in args.scorer.split(",") if n.strip()]
    if not names:
        raise StageError("--scorer is empty")

    gold_dev = [c.gold for c in dev]
    gold_test = [c.gold for c in test]
    baseline = LemmaScorer()
    lemma_dev = [bool(s) for s in baseline.scores(dev)]
    lemma_test = [bool(s) for s in baseline.scores(test)]

    rows = []
    for name in names:
        scorer = _make_scorer(name, args)
        # the lemma row reports the bare baseline; everything else is
        # evaluated as the published composition (lemma OR score >= theta)
        ldev, ltest = (None, None) if name == "lemma" else (lemma_dev, lemma_test)
        sdev = scorer.scores(dev)
        stest = scorer.scores(test)
        theta = tune_threshold(sdev, gold_dev, ldev)
        rows.append(
            ReportRow(
                scorer=scorer.name,
                theta=theta,
                dev=evaluate(sdev, gold_dev, theta, ldev),
                test=evaluate(stest, gold_test, theta, ltest),
            )
        )
    write_report(rows, args.report)
    for artifact in (args.cands, args.vectors, args.rules):
        if artifact:
            inputs.append(Path(artifact))
    snapshot = {"scorers": ",".join(names), "data": str(data)}
    collect("eval", snapshot, inputs, seed=seed).write_beside(args.report)
    for row in rows:
        print(
            "%s: theta=%.6g dev P/R/F1 %.3f/%.3f/%.3f test %.3f/%.3f/%.3f"
            % (row.scorer, row.theta, *row.dev, *row.test)
        )
    print(f"report -> {args.report}")
    return 0


def _build_service(args):
    from tegmine.annotation.service import AnnotationService, Qualification, ServiceConfig, queue_from_tsv
    from tegmine.annotation.store import RecordLog
    from tegmine.teg import load_store

    store = load_store(_store_path(args.teg)) if args.teg else None
    letters = tuple(args.letters)
    if len(letters) != 2 or letters[0] == letters[1]:
        raise StageError(f"--letters needs two distinct characters, got {args.letters!r}")
    queue = queue_from_tsv(args.cands, store=store, letters=letters)
    if not queue:
        raise StageError(f"{args.cands}: no candidates to serve")
    qualification = (
        Qualification.from_files(args.qual, args.profiles) if args.qual else Qualification()
    )
    config = ServiceConfig(
        required_votes=_opt(args, "required-votes", 5, int),
        trust_threshold=_opt(args, "trust-threshold", 0.8, float),
        lock_timeout=_opt(args, "lock-timeout", 600.0, float),
        qualification=qualification,
        static_dir=args.static,
    )
    if args.records:
        record_log = RecordLog.open(args.records, snapshot_every=args.snapshot_every)
    else:
        record_log = RecordLog()
    return AnnotationService(queue, record_log, config)


def cmd_annotate_serve(args) -> int:
    import uvicorn

    from tegmine.annotation.service import create_app

    service = _build_service(args)
    app = create_app(service)
    print(f"serving {len(service.queue)} candidates on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export(args) -> int:
    from tegmine.manifest import collect

    service = _build_service(args)
    rows = service.export_rows()
    service.export_tsv(args.out)
    snapshot = {
        "required_votes": service.config.required_votes,
        "trust_threshold": service.config.trust_threshold,
    }
    inputs = [args.cands]
    if args.records and Path(args.records).exists():
        inputs.append(args.records)
    collect("export", snapshot, inputs).write_beside(args.out)
    print(f"{len(rows)} gold labels -> {args.out}")
    return 0


def cmd_mine_meta(args) -> int:
    from tegmine.manifest import collect
    from tegmine.meta import DEFAULT_MIN_FREQ, load_cand_paths, mine_all, write_meta_tsv

    min_freq = _opt(args, "min-freq", DEFAULT_MIN_FREQ, int)
    cands = load_cand_paths(args.cands)
    rules = mine_all(cands, min_freq=min_freq)
    write_meta_tsv(rules, args.out, min_freq)
    collect("mine-meta", {"min_freq": min_freq}, [args.cands]).write_beside(args.out)
    print(f"{len(rules)} meta rules (min_freq={min_freq}) -> {args.out}")
    return 0


# --- wiring ------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="F", help="key-value file with option defaults")
    p.add_argument(
        "--workers", type=int, default=1, metavar="N", help="worker count (stages run deterministic, so 1)"
    )


def _service_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cands", required=True, metavar="F", help="discovery export TSV")
    p.add_argument("--teg", metavar="D", help="TEG store; restores example entities")
    p.add_argument("--records", metavar="F", help="append-only annotation record log")
    p.add_argument("--snapshot-every", type=int, default=100, metavar="N")
    p.add_argument("--required-votes", type=int, metavar="N")
    p.add_argument("--trust-threshold", type=float, metavar="X")
    p.add_argument("--lock-timeout", type=float, metavar="SECONDS")
    p.add_argument("--qual", metavar="F", help="qualification key-value file")
    p.add_argument("--profiles", metavar="F", help="worker profile TSV")
    p.add_argument("--static", metavar="D", help="annotation UI directory to serve at /")
    p.add_argument("--letters", default="AB", metavar="XY", help="placeholder letters, premise order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tegmine", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("build-teg", help="ingest triples and type the event graph")
    p.add_argument("--triples", required=True, metavar="F", help="path<TAB>entity1<TAB>entity2 lines")
    p.add_argument("--types", required=True, metavar="F", help="entity<TAB>type,type TSV")
    p.add_argument("--k", type=int, metavar="N", help="types per slot (default 5)")
    p.add_argument("--rmin", type=int, metavar="N", help="minimum subrelation size (default 5)")
    p.add_argument("--out", required=True, metavar="D", help="output directory")
    _common(p)
    p.set_defaults(func=cmd_build_teg)

    p = sub.add_parser("discover", help="score and rank inference candidates")
    p.add_argument("--teg", required=True, metavar="D", help="build-teg output directory")
    p.add_argument("--theta-relv", type=float, metavar="X", help="relevance threshold (default 1000)")
    p.add_argument("--theta-sigma", type=float, metavar="X", help="significance threshold (default 15)")
    p.add_argument("--theta-esr", type=float, metavar="X", help="entity-support threshold (default 0.6)")
    p.add_argument("--rmin", type=int, metavar="N", help="minimum overlap (default 5)")
    p.add_argument("--top", type=int, metavar="N", help="premises kept per hypothesis (default 100)")
    p.add_argument("--out", required=True, metavar="F", help="candidate TSV")
    _common(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("train", help="train embedding models on the TEG")
    p.add_argument("--algo", required=True, choices=("sgns", "transe", "complex"))
    p.add_argument("--teg", required=True, metavar="D")
    p.add_argument("--typed", action="store_true", help="use typed subrelations instead of raw relations")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--dim", type=int, metavar="N")
    p.add_argument("--epochs", type=int, metavar="N")
    p.add_argument("--out", required=True, metavar="D", help="output directory for vector tables")
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="threshold-tune scorers on dev, report dev/test P/R/F1")
    p.add_argument(
        "--data",
        metavar="PATH",
        help=f"labeled TSV (seeded 25:75 split) or released-data directory; default ${DATA_DIR_ENV}",
    )
    p.add_argument(
        "--scorer",
        default="lemma,always-yes",
        metavar="NAME[,NAME...]",
        help=f"among {', '.join(SCORER_NAMES)}; a+b sums two scorers",
    )
    p.add_argument("--seed", type=int, metavar="N", help="split seed (default 0)")
    p.add_argument("--cands", metavar="F", help="discovery export for the sherlock scorer")
    p.add_argument("--vectors", metavar="F", help="vector table for embedding scorers")
    p.add_argument("--rules", metavar="F", help="rule TSV for the rules scorer")
    p.add_argument("--teg", metavar="D", help="TEG store for inclusion scorers")
    p.add_argument("--typed", action="store_true", help="typed keys for inclusion/relation scorers")
    p.add_argument("--report", required=True, metavar="F", help="output report TSV")
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("annotate-serve", help="serve annotation batches over HTTP")
    _service_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    _common(p)
    p.set_defaults(func=cmd_annotate_serve)

    p = sub.add_parser("mine-meta", help="mine meta rules from a candidate export")
    p.add_argument("--cands", required=True, metavar="F", help="discovery export TSV")
    p.add_argument("--min-freq", type=int, metavar="N", help="frequency floor (default 10)")
    p.add_argument("--out", required=True, metavar="F", help="meta-rule TSV")
    _common(p)
    p.set_defaults(func=cmd_mine_meta)

    p = sub.add_parser("export", help="aggregate an annotation log into a labeled TSV")
    _service_args(p)
    p.add_argument("--out", required=True, metavar="F", help="labeled TSV")
    _common(p)
    p.set_defaults(func=cmd_export)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help and usage errors
        return exc.code if isinstance(exc.code, int) else 2
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config_path = getattr(args, "config", None)
        args._config_pairs = load_kv_file(config_path) if config_path else {}
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"tegmine {args.command}: error: {exc}", file=sys.stderr)
        log.debug("stage traceback", exc_info=True)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
