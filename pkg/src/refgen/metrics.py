"""Evaluation measures for generated and resolved referring utterances.

Inputs are token lists.  ``hypotheses[k]`` is scored against the list of
references ``references[k]``.  BLEU-2, ROUGE-L and embedding F1 come back on
a 0-100 scale; CIDEr is returned on its native scale (0-10) and multiplied by
100 only when rendered in tables.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus.scoring import load_stopwords
from .embeddings import EmbeddingProvider, greedy_match_prf

Tokens = Sequence[str]


def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _check(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]]) -> None:
    if not hypotheses:
        raise ValueError("empty hypothesis set")
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(references)} reference sets")
    if any(len(r) == 0 for r in references):
        raise ValueError("every hypothesis needs at least one reference")


def bleu(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]], max_n: int = 2) -> float:
    """Corpus BLEU with uniform weights up to ``max_n``, no smoothing, 0-100.

    Effective reference length per sentence is the closest reference length
    (shorter wins ties).
    """
    _check(hypotheses, references)
    matched = [0] * max_n
    total = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, refs in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += min((abs(len(r) - len(hyp)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            counts = _ngrams(hyp, n)
            max_ref: Counter = Counter()
            for r in refs:
                max_ref |= _ngrams(r, n)
            matched[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            total[n - 1] += max(len(hyp) - n + 1, 0)
    if min(matched) == 0 or hyp_len == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matched, total)) / max_n
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_p)


def bleu2(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]]) -> float:
    return bleu(hypotheses, references, max_n=2)


def lcs_length(a: Tokens, b: Tokens) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_sentence(hyp: Tokens, refs: Sequence[Tokens], beta: float = 1.2) -> float:
    if not hyp:
        return 0.0
    precs, recs = [], []
    for r in refs:
        lcs = lcs_length(hyp, r)
        precs.append(lcs / len(hyp))
        recs.append(lcs / len(r) if r else 0.0)
    p, r = max(precs), max(recs)
    if p == 0 or r == 0:
        return 0.0
    return (1 + beta**2) * p * r / (r + beta**2 * p)


def rouge(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]], beta: float = 1.2) -> float:
    """Mean sentence-level ROUGE-L F-measure (best precision and recall over references), 0-100."""
    _check(hypotheses, references)
    return 100.0 * float(np.mean([rouge_l_sentence(h, r, beta) for h, r in zip(hypotheses, references)]))


def cider(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]], n: int = 4) -> float:
    """CIDEr: tf-idf weighted n-gram cosine, averaged over n = 1..4 and references, times 10.

    Document frequencies are counted over reference sets of the corpus being
    scored.
    """
    _check(hypotheses, references)
    df: Counter = Counter()
    for refs in references:
        seen = set()
        for r in refs:
            for k in range(1, n + 1):
                seen.update(_ngrams(r, k))
        df.update(seen)
    log_n = math.log(float(len(references)))

    def vectorise(tokens: Tokens):
        vecs, norms = [], []
        for k in range(1, n + 1):
            vec = {g: tf * (log_n - math.log(max(1.0, df[g]))) for g, tf in _ngrams(tokens, k).items()}
            vecs.append(vec)
            norms.append(math.sqrt(sum(v * v for v in vec.values())))
        return vecs, norms

    scores = []
    for hyp, refs in zip(hypotheses, references):
        h_vecs, h_norms = vectorise(hyp)
        per_n = np.zeros(n)
        for r in refs:
            r_vecs, r_norms = vectorise(r)
            for k in range(n):
                dot = sum(v * r_vecs[k].get(g, 0.0) for g, v in h_vecs[k].items())
                if h_norms[k] != 0 and r_norms[k] != 0:
                    per_n[k] += dot / (h_norms[k] * r_norms[k])
        scores.append(10.0 * per_n.mean() / len(refs))
    return float(np.mean(scores))


def embedding_f1(hypothesis: Tokens, references: Sequence[Tokens], provider: EmbeddingProvider) -> float:
    """Best greedy-matching F1 of ``hypothesis`` against any single reference (raw, not x100)."""
    if not references:
        raise ValueError("empty reference set")
    hyp = provider.embed(hypothesis)
    return max(greedy_match_prf(hyp, provider.embed(r))[2] for r in references)


def corpus_embedding_f1(hypotheses: Sequence[Tokens], references: Sequence[Sequence[Tokens]],
                        provider: EmbeddingProvider) -> float:
    _check(hypotheses, references)
    return 100.0 * float(np.mean([embedding_f1(h, r, provider) for h, r in zip(hypotheses, references)]))


def target_rank(scores: Sequence[float], target: int) -> int:
    """1-based rank of ``target`` when candidates are sorted by descending score (lower index first on ties)."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order.index(target) + 1


def accuracy_mrr(ranks: Iterable[int]) -> tuple[float, float]:
    """Accuracy and mean reciprocal rank (0-100) from 1-based target ranks."""
    ranks = list(ranks)
    if not ranks:
        raise ValueError("no rankings")
    if any(r < 1 for r in ranks):
        raise ValueError("target missing from ranking")
    acc = 100.0 * sum(r == 1 for r in ranks) / len(ranks)
    mrr = 100.0 * sum(1.0 / r for r in ranks) / len(ranks)
    return acc, mrr


def verbatim_baseline(chains: Mapping[str, Mapping[int, Sequence[str]]]) -> dict[tuple[str, int], list[str]]:
    """Reuse each chain's first generated utterance for all its later positions.

    ``chains`` maps chain key -> {chain_position: generated tokens}.  Chains
    without a position-1 generation are skipped with a warning.
    """
    out = {}
    for key in sorted(chains):
        gens = chains[key]
        if 1 not in gens:
            warnings.warn(f"chain {key} has no first generation; skipped", RuntimeWarning, stacklevel=2)
            continue
        for pos in sorted(gens):
            if pos > 1:
                out[(key, pos)] = list(gens[1])
    return out


def is_content(token: str, stopwords: frozenset[str] | None = None) -> bool:
    stop = load_stopwords("content") if stopwords is None else stopwords
    return token not in stop and any(ch.isalnum() for ch in token)


def repetition_and_vocab(hypotheses: Sequence[Tokens]) -> tuple[float, int]:
    """Share of utterances repeating some content word, and number of distinct tokens."""
    if not hypotheses:
        return 0.0, 0
    stop = load_stopwords("content")
    repeats = 0
    for hyp in hypotheses:
        counts = Counter(t for t in hyp if is_content(t, stop))
        repeats += any(c > 1 for c in counts.values())
    vocab = {t for hyp in hypotheses for t in hyp}
    return repeats / len(hypotheses), len(vocab)


# --- reports -------------------------------------------------------------------

SUBSETS = ("first", "later", "overall")


@dataclass
class MetricReport:
    values: dict[str, dict[str, float]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"values": self.values, "counts": self.counts}


def generation_report(
    hypotheses: Sequence[Tokens],
    references: Sequence[Sequence[Tokens]],
    positions: Sequence[int],
    provider: EmbeddingProvider | None = None,
    ranks: Sequence[int] | None = None,
) -> MetricReport:
    """Metric suite split by chain position: first (1), later (>1) and overall."""
    report = MetricReport()
    groups = {
        "first": [i for i, p in enumerate(positions) if p == 1],
        "later": [i for i, p in enumerate(positions) if p > 1],
        "overall": list(range(len(positions))),
    }
    for name, idx in groups.items():
        report.counts[name] = len(idx)
        if not idx:
            continue
        hyps = [hypotheses[i] for i in idx]
        refs = [references[i] for i in idx]
        vals = {"bleu2": bleu2(hyps, refs), "rouge": rouge(hyps, refs), "cider": 100.0 * cider(hyps, refs)}
        if provider is not None:
            vals["embedding_f1"] = corpus_embedding_f1(hyps, refs, provider)
        if ranks is not None:
            vals["acc"], vals["mrr"] = accuracy_mrr(ranks[i] for i in idx)
        report.values[name] = vals
    return report


def render_table(reports: Mapping[str, MetricReport], columns: Sequence[str] | None = None) -> str:
    """Plain-text table with one row per (system, subset)."""
    columns = list(columns or ("bleu2", "rouge", "cider", "embedding_f1", "acc", "mrr"))
    header = ["model", "subset", *columns, "n"]
    rows = [header]
    for system, rep in reports.items():
        for subset in SUBSETS:
            if subset not in rep.values:
                continue
            vals = rep.values[subset]
            rows.append([system, subset, *(f"{vals[c]:.2f}" if c in vals else "-" for c in columns),
                         str(rep.counts.get(subset, 0))])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def aggregate_runs(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation across runs (sd 0 for a single run)."""
    arr = np.asarray(values, dtype=float)
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), sd


def format_mean_sd(values: Sequence[float]) -> str:
    mean, sd = aggregate_runs(values)
    return f"{mean:.2f} ({sd:.2f})"


def merge_reports(reports: Sequence[MetricReport]) -> dict[str, dict[str, str]]:
    """Per subset and metric, 'mean (sd)' across several runs' reports."""
    collected: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for rep in reports:
        for subset, vals in rep.values.items():
            for metric, v in vals.items():
                collected[subset][metric].append(v)
    return {s: {m: format_mean_sd(v) for m, v in ms.items()} for s, ms in collected.items()}
