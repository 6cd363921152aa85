"""Command-line entry point: train, tag, eval, ablate, vocab-stats.

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from .corpus_io.config import parse_units, read_config
from .corpus_io.corpus import TaggedUtterance, format_corpus, read_corpus
from .corpus_io.model_file import load_model, save_model
from .corpus_io.vectors import read_word_vectors
from .corpus_io.vocab_report import vocab_report
from .crf import TagSet
from .errors import DataFormatError, DomainError, NonFiniteError
from .evaluation import format_report, oov_report
from .experiments import format_ablation, run_ablation
from .featurize import Featurizer, load_lexicon
from .training import TrainConfig, format_epoch_log, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

PRECEDENCE = "Settings are resolved as: built-in defaults < --config file < command-line flags."


class UsageError(Exception):
    pass


def _training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file with TrainConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--units", help="comma-separated subset of char,phoneme,byte, or 'none'")
    p.add_argument("--word-embeddings", action=argparse.BooleanOptionalAction, default=None,
                   help="concatenate dedicated word embeddings")
    p.add_argument("--epochs", type=int, help="max_epochs")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--dropout", type=float, help="dropout_rate")
    p.add_argument("--lexicon", type=Path, help="word<TAB>phonemes pronunciation lexicon")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subword-ner",
        description="Named-entity tagger over character, phoneme and byte subword units.",
        epilog=PRECEDENCE,
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model", epilog=PRECEDENCE)
    _training_flags(p)
    p.add_argument("--train", type=Path, required=True, help="training corpus")
    p.add_argument("--dev", type=Path, required=True, help="development corpus used for model selection")
    p.add_argument("--word-vectors", type=Path, help="pre-trained vectors, 'word v1 ... v_dim' per line")
    p.add_argument("--model", type=Path, required=True, help="where to write the model")
    p.add_argument("--out", type=Path, help="epoch log path (default: <model>.epochs.tsv)")

    p = sub.add_parser("tag", help="label a corpus file or whitespace-tokenized lines from stdin")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", type=Path, help="corpus file (token<TAB>label); labels are ignored")
    p.add_argument("--out", type=Path, help="output path (default: stdout)")

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--gold", type=Path, required=True)
    p.add_argument("--pred", type=Path, help="predicted corpus; if omitted, --model tags the gold tokens")
    p.add_argument("--model", type=Path, help="model for tagging and/or its training word vocabulary")
    p.add_argument("--oov", action="store_true", help="append the out-of-vocabulary report (needs --model)")
    p.add_argument("--out", type=Path, help="output path (default: stdout)")

    p = sub.add_parser("ablate", help="train every unit subset with and without word embeddings", epilog=PRECEDENCE)
    _training_flags(p)
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--dev", type=Path, required=True)
    p.add_argument("--test", type=Path, help="optional test corpus to score every setting on")
    p.add_argument("--seeds", type=int, default=1, help="replicates per setting")
    p.add_argument("--workers", type=int, default=1, help="parallel training processes")
    p.add_argument("--out", type=Path, help="output path (default: stdout)")

    p = sub.add_parser("vocab-stats", help="vocabulary sizes and parameter counts")
    p.add_argument("--model", type=Path, help="read vocabularies from a trained model")
    p.add_argument("--train", type=Path, help="or build them from a training corpus")
    p.add_argument("--lexicon", type=Path)
    p.add_argument("--config", type=Path, help="dimensions used for parameter counts")
    p.add_argument("--out", type=Path, help="output path (default: stdout)")
    return parser


def resolve_config(args) -> TrainConfig:
    config = read_config(args.config) if args.config else TrainConfig()
    flags = {
        "seed": args.seed,
        "max_epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "dropout_rate": args.dropout,
        "use_word_embeddings": args.word_embeddings,
    }
    overrides = {k: v for k, v in flags.items() if v is not None}
    if args.units is not None:
        overrides["units"] = parse_units(args.units)
    try:
        return config.replace(**overrides)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_train(args) -> int:
    config = resolve_config(args)
    train_corpus = read_corpus(args.train, "train")
    dev_corpus = read_corpus(args.dev, "dev")
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    vectors = read_word_vectors(args.word_vectors, config.word_embed_dim) if args.word_vectors else None
    result = train(config, train_corpus, dev_corpus, lexicon, vectors)
    save_model(args.model, result.tagger, config)
    log_path = args.out or args.model.with_name(args.model.name + ".epochs.tsv")
    log_path.write_text(format_epoch_log(result.log), encoding="utf-8")
    print(f"best epoch {result.best.epoch}: dev F1 {result.best.dev_f1:.2f}", file=sys.stderr)
    return EXIT_OK


def cmd_tag(args) -> int:
    tagger = load_model(args.model).tagger
    if args.input is not None:
        corpus = read_corpus(args.input, "test", strict=False)
        predictions = tagger.predict([u.tokens for u in corpus])
        text = format_corpus(TaggedUtterance(u.tokens, tuple(p)) for u, p in zip(corpus, predictions))
    else:
        lines = [line.lower().split() for line in sys.stdin]
        lines = [toks for toks in lines if toks]
        predictions = tagger.predict(lines) if lines else []
        text = "".join(" ".join(f"{t}/{l}" for t, l in zip(toks, labs)) + "\n" for toks, labs in zip(lines, predictions))
    _emit(text, args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.pred is None and args.model is None:
        raise UsageError("eval needs --pred or --model")
    if args.oov and args.model is None:
        raise UsageError("--oov needs --model for the training vocabulary")
    gold = read_corpus(args.gold, "test", strict=False)
    tagger = load_model(args.model).tagger if args.model is not None else None
    if args.pred is not None:
        predicted = read_corpus(args.pred, "test", strict=False)
        if [u.tokens for u in predicted] != [u.tokens for u in gold]:
            raise DataFormatError("predicted and gold corpora have different tokens", args.pred)
        predictions = [list(u.labels) for u in predicted]
    else:
        predictions = tagger.predict([u.tokens for u in gold])
    oov = oov_report(gold, predictions, tagger.featurizer.word_vocab) if args.oov else None
    _emit(format_report(predictions, list(gold), oov), args.out)
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = resolve_config(args)
    if args.seeds < 1 or args.workers < 1:
        raise UsageError("--seeds and --workers must be positive")
    units = config.units or ("char", "phoneme", "byte")
    train_corpus = read_corpus(args.train, "train")
    dev_corpus = read_corpus(args.dev, "dev")
    test_corpus = read_corpus(args.test, "test") if args.test else None
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    rows = run_ablation(
        config, train_corpus, dev_corpus, lexicon, units=units, n_seeds=args.seeds,
        test_corpus=test_corpus, workers=args.workers,
    )
    _emit(format_ablation(rows), args.out)
    return EXIT_OK


def cmd_vocab_stats(args) -> int:
    if (args.model is None) == (args.train is None):
        raise UsageError("vocab-stats needs exactly one of --model or --train")
    if args.model is not None:
        artifact = load_model(args.model)
        featurizer, tags, config = artifact.tagger.featurizer, artifact.tagger.tags, artifact.config
    else:
        config = read_config(args.config) if args.config else TrainConfig()
        corpus = read_corpus(args.train, "train")
        lexicon = load_lexicon(args.lexicon) if args.lexicon else None
        featurizer = Featurizer.from_training_words(list(corpus.words()), lexicon)
        tags = TagSet.from_labels(corpus.labels())
    _emit(vocab_report(featurizer, tags, config.model_config()).format(), args.out)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "tag": cmd_tag,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "vocab-stats": cmd_vocab_stats,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
