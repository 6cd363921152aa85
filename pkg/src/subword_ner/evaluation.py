"""Per-token precision, recall and F1, the OOV slice, and report formatting."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ShapeError


@dataclass(frozen=True)
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return 100.0 * self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _label_seqs(x) -> list[Sequence[str]]:
    return [u.labels if hasattr(u, "labels") else u for u in x]


def _token_pairs(predictions, gold) -> Iterable[tuple[str, str]]:
    predictions, gold = _label_seqs(predictions), _label_seqs(gold)
    if len(predictions) != len(gold):
        raise ShapeError(f"{len(predictions)} predicted utterances vs {len(gold)} gold")
    for i, (p, g) in enumerate(zip(predictions, gold)):
        if len(p) != len(g):
            raise ShapeError(f"utterance {i}: {len(p)} predicted labels vs {len(g)} gold")
        yield from zip(p, g)


def _count(pairs: Iterable[tuple[str, str]]) -> dict[str, list[int]]:
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for pred, gold in pairs:
        if pred == gold:
            if gold != "O":
                counts[gold][0] += 1
            continue
        if pred != "O":
            counts[pred][1] += 1
        if gold != "O":
            counts[gold][2] += 1
    return counts


def per_token_prf(predictions, gold) -> PRF:
    """Micro-averaged token scores over every non-O label.

    A token is a true positive when its predicted label equals a non-O gold
    label. A wrong non-O prediction is a false positive; a gold non-O token
    not predicted exactly is a false negative. O/O tokens count nowhere.
    """
    total = PRF()
    for tp, fp, fn in _count(_token_pairs(predictions, gold)).values():
        total = total + PRF(tp, fp, fn)
    return total


def per_label_prf(predictions, gold) -> dict[str, PRF]:
    return {label: PRF(*c) for label, c in sorted(_count(_token_pairs(predictions, gold)).items())}


def per_type_prf(predictions, gold) -> dict[str, PRF]:
    """Per-label counts folded by entity type (``B-X`` and ``I-X`` both count toward ``X``)."""
    out: dict[str, PRF] = {}
    for label, prf in per_label_prf(predictions, gold).items():
        etype = label[2:]
        out[etype] = out.get(etype, PRF()) + prf
    return dict(sorted(out.items()))


def macro_f1(predictions, gold) -> float:
    """Unweighted mean of per-type F1. Reported only; never used for model selection."""
    by_type = per_type_prf(predictions, gold)
    return sum(p.f1 for p in by_type.values()) / len(by_type) if by_type else 0.0


@dataclass(frozen=True)
class OOVReport:
    utterances_with_oov: int
    oov_token_count: int
    prf_on_oov_utterances: PRF
    prf_on_oov_tokens: PRF


def oov_report(gold, predictions, word_vocab) -> OOVReport:
    """Scores restricted to utterances with an unseen word, and to the unseen tokens themselves.

    ``gold`` items carry ``tokens`` and ``labels``; ``word_vocab`` supports
    ``in`` and holds the training word types.
    """
    gold = list(gold)
    predictions = _label_seqs(predictions)
    if len(predictions) != len(gold):
        raise ShapeError(f"{len(predictions)} predicted utterances vs {len(gold)} gold")
    utt_pred, utt_gold = [], []
    tok_pairs: list[tuple[str, str]] = []
    n_oov = 0
    for u, pred in zip(gold, predictions):
        if len(pred) != len(u.labels):
            raise ShapeError("predicted and gold utterance lengths differ")
        oov = [i for i, tok in enumerate(u.tokens) if tok not in word_vocab]
        if not oov:
            continue
        utt_pred.append(pred)
        utt_gold.append(u.labels)
        n_oov += len(oov)
        tok_pairs.extend((pred[i], u.labels[i]) for i in oov)
    return OOVReport(
        utterances_with_oov=len(utt_gold),
        oov_token_count=n_oov,
        prf_on_oov_utterances=per_token_prf(utt_pred, utt_gold),
        prf_on_oov_tokens=per_token_prf([[p for p, _ in tok_pairs]], [[g for _, g in tok_pairs]]),
    )


def oov_slice(test, word_vocab, tagger) -> OOVReport:
    """Tag ``test`` with ``tagger`` and report on its out-of-vocabulary slice."""
    test = list(test)
    predictions = tagger.predict([u.tokens for u in test])
    return oov_report(test, predictions, word_vocab)


def _prf_row(name: str, prf: PRF) -> str:
    return f"{name}\t{prf.tp}\t{prf.fp}\t{prf.fn}\t{prf.precision:.2f}\t{prf.recall:.2f}\t{prf.f1:.2f}"


def format_report(predictions, gold, oov: OOVReport | None = None) -> str:
    lines = ["type\ttp\tfp\tfn\tprecision\trecall\tf1"]
    for etype, prf in per_type_prf(predictions, gold).items():
        lines.append(_prf_row(etype, prf))
    total = per_token_prf(predictions, gold)
    lines.append(f"macro_f1\t{macro_f1(predictions, gold):.2f}")
    lines.append("P\tR\tF1")
    lines.append(f"{total.precision:.2f}\t{total.recall:.2f}\t{total.f1:.2f}")
    if oov is not None:
        lines.append("")
        lines.append(f"oov_utterances\t{oov.utterances_with_oov}")
        lines.append(f"oov_tokens\t{oov.oov_token_count}")
        lines.append("slice\ttp\tfp\tfn\tprecision\trecall\tf1")
        lines.append(_prf_row("oov_utterances", oov.prf_on_oov_utterances))
        lines.append(_prf_row("oov_tokens", oov.prf_on_oov_tokens))
    return "\n".join(lines) + "\n"
