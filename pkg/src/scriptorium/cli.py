"""Command-line entry point: ``scriptorium {generate|train|finetune|embed|eval|report}``.

Every subcommand reads its flags, optionally overlaid on a JSON ``--config``
file, and writes outputs that carry the resolved run configuration plus the
digests of their inputs. Explicit flags win over the config file, which wins
over built-in defaults. Two environment variables supply defaults:
``SCRIPTORIUM_OUT`` (base output directory) and ``SCRIPTORIUM_WORKERS``.
"""
import argparse
import hashlib
import itertools
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from ._validation import ConfigurationError, DegenerateInputError
from .corpus import ManifestError, manifest_from_dataset, read_manifest, summary
from .embedstore import EmbeddingStore, StoreFormatError
from .encoder.checkpoint import CheckpointError
from .encoder.data import ImageSet, holdout_split
from .encoder.train import TrainedEncoder, TrainHyperparams, fine_tune, pretrain
from .metrics import EvalReport, delta_k, eer, hard_topn, soft_topn, topn_accuracy
from .synthgen import (
    DatasetManifest, FontSquare, GeneratorConfig, default_vocabulary_path, load_backgrounds,
    load_font_pool, read_vocabulary, sample_lexicon, write_dataset,
)
from .tasks import (
    WriterIdentifier, WriterRetriever, classify_writers, cosine_matrix, estimate_k,
    signature_template,
)

logger = logging.getLogger("scriptorium")

OUT_ENV = "SCRIPTORIUM_OUT"
WORKERS_ENV = "SCRIPTORIUM_WORKERS"
TASK_NAMES = ("identification", "retrieval", "verification", "classification")


class UsageError(Exception):
    """Bad flags or inputs; reported on stderr with exit code 2."""


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def default_out(name):
    return str(Path(os.environ.get(OUT_ENV, ".")) / name)


def default_workers():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_config(args):
    """The resolved flags of a run, as recorded in output provenance."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "verbose")}
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()}


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def require(args, *flags):
    for flag in flags:
        if getattr(args, flag.lstrip("-").replace("-", "_")) is None:
            raise UsageError(f"{flag} is required")


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args):
    require(args, "--fonts")
    if not Path(args.fonts).is_dir():
        raise UsageError(f"--fonts: directory not found: {args.fonts}")
    words_path = args.words or default_vocabulary_path()
    if not Path(words_path).is_file():
        raise UsageError(f"--words: file not found: {words_path}")
    if args.backgrounds is not None and not Path(args.backgrounds).is_dir():
        raise UsageError(f"--backgrounds: directory not found: {args.backgrounds}")
    out = args.out or default_out("dataset")

    fonts = load_font_pool(args.fonts)
    if args.num_fonts is not None:
        if args.num_fonts > len(fonts):
            raise UsageError(f"--num-fonts {args.num_fonts} exceeds the {len(fonts)} usable fonts in {args.fonts}")
        fonts = fonts[:args.num_fonts]
    vocabulary = read_vocabulary(words_path)
    lexicon = sample_lexicon(vocabulary, args.num_words, args.seed)
    try:
        config = GeneratorConfig.from_dict(args.generator or {})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"generator config: {exc}") from None
    backgrounds = load_backgrounds(args.backgrounds, config.num_backgrounds)
    view = FontSquare(fonts, lexicon, config, args.seed, backgrounds)
    manifest = write_dataset(view, out, workers=args.workers or default_workers(),
                             shard_size=args.shard_size, split_name=args.split_name)
    print(manifest.digest())
    return 0


# ---------------------------------------------------------------------------
# train / finetune
# ---------------------------------------------------------------------------

def _hyperparams(args):
    if args.lr is not None and not args.lr > 0:
        raise UsageError(f"--lr must be > 0, got {args.lr}")
    fields = {
        "batch_size": args.batch_size, "patience": args.patience,
        "pseudo_epoch": args.pseudo_epoch, "max_iterations": args.max_iterations,
        "seed": args.seed,
    }
    if args.lr is not None:
        fields["initial_lr"] = args.lr
    try:
        return TrainHyperparams(**{k: v for k, v in fields.items() if v is not None})
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _train_paths(args, default_name):
    out = Path(args.out or default_out(default_name))
    out.parent.mkdir(parents=True, exist_ok=True)
    log = Path(args.log) if args.log else out.with_name(out.name + ".log.jsonl")
    state = out.with_name(out.name + ".state")
    return out, log, state


def cmd_train(args):
    require(args, "--data")
    hp = _hyperparams(args)
    data = Path(args.data)
    if not (data / "manifest.json").is_file():
        raise UsageError(f"--data: no generated dataset at {args.data}")
    out, log, state = _train_paths(args, "encoder.ckpt")
    manifest = DatasetManifest.load(data)
    full = ImageSet.from_dataset_dir(data)
    train_set, val_set = holdout_split(full, args.val_fraction, args.seed)
    provenance = {
        "run": run_config(args),
        "inputs": {"dataset_manifest": manifest.digest(), "samples": manifest.samples_digest},
    }
    encoder = pretrain(
        train_set, val_set, hp, num_classes=manifest.num_fonts,
        classes=[f["name"] for f in manifest.fonts],
        log_path=log, state_path=state, resume=args.resume, provenance=provenance,
    )
    encoder.save(out)
    print(f"{out}\t{file_digest(out)}\tval_accuracy={encoder.provenance['best_val_accuracy']:.4f}")
    return 0


def _load_encoder(path, flag="--checkpoint"):
    if path is None:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise UsageError(f"{flag}: file not found: {path}")
    try:
        return TrainedEncoder.load(path)
    except (CheckpointError, ValueError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _load_manifest(path, flag="--manifest"):
    try:
        return read_manifest(path)
    except ManifestError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def cmd_finetune(args):
    require(args, "--manifest")
    hp = _hyperparams(args)
    encoder = _load_encoder(args.checkpoint)
    corpus = _load_manifest(args.manifest)
    train_part = corpus.select(split=args.split) if args.split else corpus
    if not train_part.entries:
        raise UsageError(f"--split: no entries tagged {args.split!r} in {args.manifest}")
    writers = train_part.writers()
    full = train_part.image_set()
    if args.val_split:
        val_part = corpus.select(split=args.val_split)
        unknown = set(val_part.writers()) - set(writers)
        if not val_part.entries or unknown:
            raise UsageError(f"--val-split: {args.val_split!r} is empty or has writers absent from training")
        index = {w: i for i, w in enumerate(writers)}
        train_set = full
        val_set = ImageSet([val_part.resolve(e) for e in val_part.entries],
                           [index[e.writer_id] for e in val_part.entries])
    else:
        train_set, val_set = holdout_split(full, args.val_fraction, args.seed)
    out, log, state = _train_paths(args, "finetuned.ckpt")
    provenance_inputs = {"checkpoint": file_digest(args.checkpoint), "manifest": file_digest(args.manifest)}
    try:
        tuned = fine_tune(encoder, train_set, val_set, lr=hp.initial_lr, hyperparams=hp, classes=writers,
                          log_path=log, state_path=state, resume=args.resume)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tuned.provenance = {"run": run_config(args), "inputs": provenance_inputs, **tuned.provenance}
    tuned.save(out)
    print(f"{out}\t{file_digest(out)}\tval_accuracy={tuned.provenance['best_val_accuracy']:.4f}")
    return 0


# ---------------------------------------------------------------------------
# embed
# ---------------------------------------------------------------------------

def cmd_embed(args):
    if (args.manifest is None) == (args.data is None):
        raise UsageError("give exactly one of --manifest or --data")
    encoder = _load_encoder(args.checkpoint)
    if args.manifest is not None:
        corpus = _load_manifest(args.manifest)
        inputs = {"manifest": file_digest(args.manifest)}
    else:
        if not (Path(args.data) / "manifest.json").is_file():
            raise UsageError(f"--data: no generated dataset at {args.data}")
        corpus = manifest_from_dataset(args.data, args.docs_per_writer, args.val_fraction, args.seed)
        inputs = {"dataset_manifest": DatasetManifest.load(args.data).digest()}
    if args.split is not None:
        corpus = corpus.select(split=args.split)
        if not corpus.entries:
            raise UsageError(f"--split: no entries tagged {args.split!r}")
    for entry in corpus.entries:
        if not corpus.resolve(entry).is_file():
            raise UsageError(f"image not found: {corpus.resolve(entry)}")
    inputs["checkpoint"] = file_digest(args.checkpoint)
    vectors = encoder.encode([corpus.resolve(e) for e in corpus.entries], batch_size=args.batch_size)
    provenance = {"run": run_config(args), "inputs": inputs, "corpus": summary(corpus)}
    store = EmbeddingStore.from_arrays(
        vectors,
        [e.writer_id for e in corpus.entries],
        [e.document_id for e in corpus.entries],
        [e.path for e in corpus.entries],
        provenance=provenance,
        kinds=[e.kind for e in corpus.entries],
    )
    out = Path(args.out or default_out("embeddings.emb"))
    out.parent.mkdir(parents=True, exist_ok=True)
    store.save(out)
    print(f"{out}\t{len(store)} records\t{file_digest(out)}")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _load_store(path, flag):
    if path is None:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise UsageError(f"{flag}: file not found: {path}")
    try:
        return EmbeddingStore.load(path)
    except StoreFormatError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _fmt(x):
    return repr(float(x))


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(c) for c in row) + "\n")


def _ranked_cells(ranked, n):
    return ";".join(f"{c}:{_fmt(s)}" for c, s in ranked.top(n))


def eval_identification(train_store, test_store, out_dir, top=5):
    """Word queries against per-writer templates of the training store."""
    known = set(train_store.writer_ids)
    queries = [r for r in test_store.records if r.writer_id in known]
    if not queries:
        raise UsageError("identification: no test records belong to a writer of the training store")
    if len(queries) < len(test_store):
        logger.warning("identification: %d test records from unknown writers skipped", len(test_store) - len(queries))
    model = WriterIdentifier().fit(train_store.vectors, train_store.writer_ids)
    X = np.stack([r.vector for r in queries])
    ids = [r.sample_id for r in queries]
    ranked = model.rank(X, ids)
    trials = model.trials(X, [r.writer_id for r in queries], ids)
    _write_rows(out_dir / "identification.tsv", ("query", "writer_id", "ranked"),
                ((q.sample_id, q.writer_id, _ranked_cells(r, top)) for q, r in zip(queries, ranked)))
    return {"Top-1": topn_accuracy(trials, 1), "Top-5": topn_accuracy(trials, 5)}


def _filter_documents(store, min_pages):
    docs = store.documents()
    if min_pages and min_pages > 1:
        counts = {}
        for d in docs:
            counts[d.writer_id] = counts.get(d.writer_id, 0) + 1
        docs = [d for d in docs if counts[d.writer_id] >= min_pages]
    return docs


def eval_retrieval(store, out_dir, min_pages=2, top=10):
    """Leave-one-out document retrieval by Euclidean distance."""
    docs = _filter_documents(store, min_pages)
    if len(docs) < 2:
        raise UsageError("retrieval: fewer than two documents remain after the --min-pages filter")
    model = WriterRetriever().fit(docs)
    ranked = model.leave_one_out()
    trials = model.trials()
    _write_rows(out_dir / "retrieval.tsv", ("query", "writer_id", "ranked"),
                ((d.document_id, d.writer_id, _ranked_cells(r, top)) for d, r in zip(docs, ranked)))
    metrics = {"Top-1": soft_topn(trials, 1), "STop-5": soft_topn(trials, 5),
               "STop-10": soft_topn(trials, 10)}
    for n in (2, 3, 4):
        metrics[f"HTop-{n}"] = hard_topn(trials, n)
    return metrics


def _signature_trials(store, n_refs):
    rows = []
    writers = sorted({r.writer_id for r in store.records})
    for w in writers:
        genuine = sorted((r for r in store.records if r.writer_id == w and r.kind == "signature_genuine"),
                         key=lambda r: r.sample_id)
        forged = sorted((r for r in store.records if r.writer_id == w and r.kind == "signature_forged"),
                        key=lambda r: r.sample_id)
        if len(genuine) <= n_refs:
            logger.warning("verification: writer %s has %d genuine signatures; skipped", w, len(genuine))
            continue
        template = signature_template([r.vector for r in genuine[:n_refs]], n_refs)
        queries = genuine[n_refs:] + forged
        scores = cosine_matrix(np.stack([q.vector for q in queries]), template[None, :])[:, 0]
        rows += [(q.sample_id, w, q.kind == "signature_genuine", s) for q, s in zip(queries, scores)]
    return rows


def _document_trials(store, min_pages):
    docs = _filter_documents(store, min_pages)
    if len(docs) < 2:
        raise UsageError("verification: fewer than two documents remain after the --min-pages filter")
    S = cosine_matrix(np.stack([d.mean_vector for d in docs]), np.stack([d.mean_vector for d in docs]))
    return [
        (f"{docs[i].document_id}|{docs[j].document_id}", docs[i].writer_id,
         docs[i].writer_id == docs[j].writer_id, S[i, j])
        for i, j in itertools.combinations(range(len(docs)), 2)
    ]


def eval_verification(store, out_dir, min_pages=2, n_refs=5):
    """EER over genuine and impostor trials; decisions at the EER threshold.

    Stores holding signatures are verified against 5-signature templates
    (remaining genuine signatures and all forgeries as queries); otherwise
    every pair of documents is a trial.
    """
    if any(r.kind.startswith("signature") for r in store.records):
        rows = _signature_trials(store, n_refs)
    else:
        rows = _document_trials(store, min_pages)
    genuine = [s for *_, g, s in rows if g]
    impostor = [s for *_, g, s in rows if not g]
    if not genuine or not impostor:
        raise UsageError("verification: need both genuine and impostor trials")
    rate, threshold = eer(genuine, impostor)
    _write_rows(out_dir / "verification.tsv", ("trial", "writer_id", "genuine", "score", "threshold", "accepted"),
                ((t, w, int(g), _fmt(s), _fmt(threshold), int(s >= threshold)) for t, w, g, s in rows))
    return {"EER": rate}


def eval_classification(store, out_dir, k_known=False, k_range=None, reducer="auto", maximize=True):
    """Cluster documents (or single images when every document is one image)."""
    docs = store.documents()
    if any(d.word_count > 1 for d in docs):
        units = docs
        ids = [d.document_id for d in docs]
        writers = [d.writer_id for d in docs]
    else:
        units = store.vectors
        ids = [r.sample_id for r in store.records]
        writers = store.writer_ids
    k_star = len(set(writers))
    try:
        if k_known:
            result = classify_writers(units, k_star, reducer, ids, k_star)
            metrics = {"K*-Sil.": result.silhouette}
        else:
            lo, hi = k_range or (2, len(units))
            result = estimate_k(units, (lo, min(hi, len(units))), reducer, maximize, ids, k_star)
            metrics = {"ΔK": delta_k(k_star, result.K_prime)}
            _write_rows(out_dir / "classification_k.tsv", ("K", "silhouette"),
                        ((k, _fmt(s)) for k, s in sorted(result.silhouette_table.items())))
    except (ValueError, DegenerateInputError) as exc:
        raise UsageError(f"classification: {exc}") from None
    truth = dict(zip(ids, writers))
    _write_rows(out_dir / "classification.tsv", ("id", "writer_id", "cluster"),
                ((i, truth[i], c) for i, c in result.assignments.items()))
    return metrics


def cmd_eval(args):
    tasks = TASK_NAMES if "all" in args.task else tuple(dict.fromkeys(args.task))
    out_dir = Path(args.out or default_out("eval"))
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = {}
    stores = {}
    for flag in ("store", "train_store", "test_store"):
        path = getattr(args, flag)
        if path is not None:
            stores[flag] = _load_store(path, "--" + flag.replace("_", "-"))
            inputs[flag] = file_digest(path)
    dataset = args.dataset
    if dataset is None:
        first = next(iter(stores.values()), None)
        dataset = (first.provenance.get("corpus", {}).get("corpus") if first else None) or "dataset"

    report = EvalReport(provenance={"run": run_config(args), "inputs": inputs})
    for task in tasks:
        if task == "identification":
            if "train_store" not in stores or "test_store" not in stores:
                if "all" in args.task:
                    continue
                raise UsageError("identification needs --train-store and --test-store")
            metrics = eval_identification(stores["train_store"], stores["test_store"], out_dir)
        else:
            store = stores.get("store")
            if store is None:
                raise UsageError(f"{task} needs --store")
            if task == "retrieval":
                metrics = eval_retrieval(store, out_dir, args.min_pages)
            elif task == "verification":
                metrics = eval_verification(store, out_dir, args.min_pages, args.n_refs)
            else:
                metrics = eval_classification(store, out_dir, args.k_known, args.k_range,
                                              args.reducer, not args.minimize_silhouette)
        for metric, value in metrics.items():
            report.add(task, dataset, metric, value)

    (out_dir / "report.md").write_text(report.render(), encoding="utf-8")
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    print(report.render(), end="")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args):
    """Merge the JSON companions of several eval runs into one report."""
    if not args.inputs:
        raise UsageError("--inputs needs at least one report.json")
    merged = EvalReport(provenance={"run": run_config(args), "inputs": {}})
    for path in args.inputs:
        if not Path(path).is_file():
            raise UsageError(f"--inputs: file not found: {path}")
        try:
            part = EvalReport.from_json(Path(path).read_text(encoding="utf-8"))
        except (ValueError, KeyError) as exc:
            raise UsageError(f"--inputs: {path} is not an eval report.json: {exc}") from None
        merged.provenance["inputs"][str(path)] = file_digest(path)
        for task, rows in part.results.items():
            for dataset, metrics in rows.items():
                for metric, value in metrics.items():
                    merged.add(task, dataset, metric, value)
    out = Path(args.out or default_out("report.md"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(merged.render(), encoding="utf-8")
    out.with_suffix(".json").write_text(merged.to_json(), encoding="utf-8")
    print(merged.render(), end="")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_training_flags(p):
    p.add_argument("--lr", type=float, help="initial learning rate (default 2e-5)")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--patience", type=int, help="pseudo-epochs without improvement before stopping")
    p.add_argument("--pseudo-epoch", type=int, help="iterations per validation round")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--val-fraction", type=float, default=0.05)
    p.add_argument("--log", help="JSON-lines progress log (default <out>.log.jsonl)")
    p.add_argument("--resume", action="store_true", help="continue from <out>.state")


def build_parser():
    parser = argparse.ArgumentParser(prog="scriptorium", description="Synthetic word datasets, style encoder training and writer-centric evaluation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of flag values; explicit flags take precedence")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.set_defaults(handler=handler)
        return p

    p = command("generate", cmd_generate, "render a synthetic font-labeled word dataset")
    p.add_argument("--fonts", help="directory of .ttf/.otf/.woff fonts")
    p.add_argument("--words", help="word list, one per line (default: bundled vocabulary)")
    p.add_argument("--num-fonts", type=int)
    p.add_argument("--num-words", type=int, help="words drawn from the list (default: all)")
    p.add_argument("--backgrounds", help="directory of paper textures (default: procedural)")
    p.add_argument("--workers", type=int)
    p.add_argument("--shard-size", type=int, default=1000)
    p.add_argument("--split-name", default="train")
    p.set_defaults(generator=None)

    p = command("train", cmd_train, "pre-train the encoder as a font classifier")
    p.add_argument("--data", help="directory written by `generate`")
    _add_training_flags(p)

    p = command("finetune", cmd_finetune, "fine-tune an encoder on a writer-labeled corpus")
    p.add_argument("--checkpoint")
    p.add_argument("--manifest")
    p.add_argument("--split", help="manifest split tag used for training (default: all entries)")
    p.add_argument("--val-split", help="split tag used for validation (default: hold out documents)")
    _add_training_flags(p)

    p = command("embed", cmd_embed, "extract 512-d style vectors into an embedding store")
    p.add_argument("--checkpoint")
    p.add_argument("--manifest", help="corpus manifest")
    p.add_argument("--data", help="generated dataset; fonts are treated as writers")
    p.add_argument("--split", help="keep only entries with this split tag")
    p.add_argument("--docs-per-writer", type=int, default=2)
    p.add_argument("--val-fraction", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=64)

    p = command("eval", cmd_eval, "run writer identification, retrieval, verification, classification")
    p.add_argument("--task", nargs="+", choices=TASK_NAMES + ("all",), default=["all"])
    p.add_argument("--store", help="store for retrieval, verification and classification")
    p.add_argument("--train-store", help="identification templates")
    p.add_argument("--test-store", help="identification queries")
    p.add_argument("--dataset", help="row label in the report (default: corpus name)")
    p.add_argument("--min-pages", type=int, default=2,
                   help="drop writers with fewer documents for retrieval and verification (0 disables)")
    p.add_argument("--n-refs", type=int, default=5, help="genuine signatures per template")
    p.add_argument("--k-known", action="store_true", help="cluster into the true writer count")
    p.add_argument("--k-range", type=int, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--reducer", choices=("auto", "umap", "pca", "none"), default="auto")
    p.add_argument("--minimize-silhouette", action="store_true",
                   help="pick the K with the lowest silhouette instead of the highest")

    p = command("report", cmd_report, "merge eval results into one report")
    p.add_argument("--inputs", nargs="+", help="report.json files written by `eval`")
    return parser, sub


def _config_defaults(path, command, subparser, commands):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"--config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("--config: top level must be an object")
    values = {k: v for k, v in data.items() if k not in commands}
    section = data.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"--config: section {command!r} must be an object")
    values.update(section)
    known = {a.dest for a in subparser._actions} | {"generator"}
    out = {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest not in known:
            if key in section:
                raise UsageError(f"--config: unknown key {key!r} for {command}")
            continue
        out[dest] = value
    out.pop("config", None)
    return out


def main(argv=None):
    parser, sub = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            subparser = sub.choices[args.command]
            subparser.set_defaults(**_config_defaults(args.config, args.command, subparser, sub.choices))
            args = parser.parse_args(argv)
        return args.handler(args)
    except (UsageError, ConfigurationError, ManifestError) as exc:
        print(f"scriptorium {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
