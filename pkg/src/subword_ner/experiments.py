"""Unit-subset ablations: every subword subset with and without word embeddings, plus word-only."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import PRF
from .featurize import UNITS, PhonemeLexicon
from .training import TrainConfig, evaluate, train

SUBWORDS = "subwords"
COMBINED = "combined"
WORD = "word"


@dataclass(frozen=True)
class AblationSetting:
    index: int
    regime: str
    units: tuple[str, ...]

    @property
    def use_word_embeddings(self) -> bool:
        return self.regime != SUBWORDS

    @property
    def name(self) -> str:
        return "+".join(self.units) if self.units else "-"


@dataclass
class AblationRow:
    setting: AblationSetting
    seeds: list[int]
    dev: list[PRF] = field(default_factory=list)
    test: list[PRF] = field(default_factory=list)

    @property
    def dev_f1(self) -> float:
        return float(np.mean([p.f1 for p in self.dev]))

    @property
    def test_f1(self) -> float | None:
        return float(np.mean([p.f1 for p in self.test])) if self.test else None


def unit_subsets(units: Sequence[str] = UNITS) -> list[tuple[str, ...]]:
    """Non-empty subsets by size, then in unit order (char, phoneme, byte, char+phoneme, ...)."""
    ordered = [u for u in UNITS if u in units]
    return [combo for k in range(1, len(ordered) + 1) for combo in itertools.combinations(ordered, k)]


def ablation_grid(units: Sequence[str] = UNITS) -> list[AblationSetting]:
    subsets = unit_subsets(units)
    settings = [(SUBWORDS, s) for s in subsets] + [(COMBINED, s) for s in subsets] + [(WORD, ())]
    return [AblationSetting(i, regime, s) for i, (regime, s) in enumerate(settings)]


def derive_seed(master: int, *path: int) -> int:
    return int(np.random.SeedSequence([master, *path]).generate_state(1)[0])


def _run_one(args):
    setting, replicate, base, train_corpus, dev_corpus, test_corpus, lexicon = args
    seed = derive_seed(base.seed, setting.index, replicate)
    config = base.replace(units=setting.units, use_word_embeddings=setting.use_word_embeddings, seed=seed)
    result = train(config, train_corpus, dev_corpus, lexicon)
    test = evaluate(result.tagger, test_corpus) if test_corpus is not None else None
    return seed, result.best.dev_f1, evaluate(result.tagger, dev_corpus), test


def run_ablation(
    base: TrainConfig,
    train_corpus,
    dev_corpus,
    lexicon: PhonemeLexicon | None = None,
    units: Sequence[str] = UNITS,
    n_seeds: int = 1,
    test_corpus=None,
    settings: Sequence[AblationSetting] | None = None,
    workers: int = 1,
) -> list[AblationRow]:
    """Train every setting ``n_seeds`` times; seeds derive from (master seed, setting index, replicate)."""
    settings = list(settings) if settings is not None else ablation_grid(units)
    train_corpus, dev_corpus = list(train_corpus), list(dev_corpus)
    test_corpus = list(test_corpus) if test_corpus is not None else None
    jobs = [
        (s, r, base, train_corpus, dev_corpus, test_corpus, lexicon) for s in settings for r in range(n_seeds)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    rows = {s.index: AblationRow(s, []) for s in settings}
    for (s, *_), (seed, _best, dev, test) in zip(jobs, results):
        row = rows[s.index]
        row.seeds.append(seed)
        row.dev.append(dev)
        if test is not None:
            row.test.append(test)
    return [rows[s.index] for s in settings]


def format_ablation(rows: Sequence[AblationRow]) -> str:
    """Results matrix (one row per setting) followed by the subwords / word / combined comparison."""
    has_test = any(r.test for r in rows)
    header = ["regime", "units", "seeds", "dev_p", "dev_r", "dev_f1"] + (["test_f1"] if has_test else [])
    lines = ["\t".join(header)]
    for r in rows:
        p = float(np.mean([x.precision for x in r.dev]))
        rec = float(np.mean([x.recall for x in r.dev]))
        cells = [r.setting.regime, r.setting.name, str(len(r.seeds)), f"{p:.2f}", f"{rec:.2f}", f"{r.dev_f1:.2f}"]
        if has_test:
            cells.append(f"{r.test_f1:.2f}" if r.test else "-")
        lines.append("\t".join(cells))

    def best(regime):
        candidates = [r for r in rows if r.setting.regime == regime]
        return max(candidates, key=lambda r: r.dev_f1) if candidates else None

    sub, word, comb = best(SUBWORDS), best(WORD), best(COMBINED)
    if sub and word and comb:
        lines.append("")
        lines.append("comparison\tsubwords\tword_level\tcombined")
        lines.append(
            f"dev_f1\t{sub.dev_f1:.2f}\t{word.dev_f1:.2f}({word.dev_f1 - sub.dev_f1:+.2f})"
            f"\t{comb.dev_f1:.2f}({comb.dev_f1 - word.dev_f1:+.2f})"
        )
        lines.append(f"best_units\t{sub.setting.name}\t-\t{comb.setting.name}")
    return "\n".join(lines) + "\n"
