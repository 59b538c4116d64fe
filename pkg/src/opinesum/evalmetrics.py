"""Corpus evaluation: BLEU (up to 4-grams, smoothed, brevity penalty),
ROUGE-SU4 recall, MRR, NDCG@k, and the sampling-strategy report."""

import math
from collections import Counter
from dataclasses import dataclass


def ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses, references, max_n=4):
    """Corpus-level BLEU with one reference per hypothesis.

    Clipped n-gram counts are pooled over the corpus; precisions for
    n >= 2 get +1 smoothing on numerator and denominator (one-sentence
    summaries rarely share 4-grams); brevity penalty exp(1 - r/c) for c < r.
    """
    if len(hypotheses) != len(references):
        raise ValueError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise ValueError("empty corpus")
    c = sum(len(h) for h in hypotheses)
    r = sum(len(g) for g in references)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        matched = 0
        total = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_counts = ngram_counts(hyp, n)
            ref_counts = ngram_counts(ref, n)
            matched += sum(min(k, ref_counts[g]) for g, k in hyp_counts.items())
            total += max(len(hyp) - n + 1, 0)
        if n == 1:
            if matched == 0:
                return 0.0
            p = matched / total
        else:
            p = (matched + 1) / (total + 1)
        log_sum += math.log(p)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum / max_n)


def skip_bigram_units(tokens, max_gap=4):
    """Unigrams plus ordered skip-bigrams with <= max_gap intervening tokens."""
    units = Counter()
    for i, tok in enumerate(tokens):
        units[(tok,)] += 1
        for j in range(i + 1, min(i + max_gap + 2, len(tokens))):
            units[(tok, tokens[j])] += 1
    return units


def rouge_su4(hypothesis, reference, max_gap=4):
    """Recall of the reference's unigram+skip-bigram multiset (clipped)."""
    ref_units = skip_bigram_units(reference, max_gap)
    total = sum(ref_units.values())
    if total == 0:
        return 0.0
    hyp_units = skip_bigram_units(hypothesis, max_gap)
    matched = sum(min(k, hyp_units[u]) for u, k in ref_units.items())
    return matched / total


def rouge_su4_corpus(hypotheses, references, max_gap=4):
    if len(hypotheses) != len(references):
        raise ValueError("hypothesis/reference length mismatch")
    if not hypotheses:
        raise ValueError("empty corpus")
    return sum(rouge_su4(h, r, max_gap) for h, r in zip(hypotheses, references)) / len(
        hypotheses
    )


def mrr(relevance_lists):
    """Mean reciprocal rank of the first relevant item; 0 when none is."""
    if not relevance_lists:
        raise ValueError("no queries")
    total = 0.0
    for rels in relevance_lists:
        if not len(rels):
            raise ValueError("empty ranking")
        for rank, rel in enumerate(rels, start=1):
            if rel:
                total += 1.0 / rank
                break
    return total / len(relevance_lists)


def ndcg_at(k, gains):
    """Discounted cumulative gain at k, normalized by the ideal ranking."""
    if k < 1:
        raise ValueError("k must be >= 1")
    gains = list(gains)
    dcg = sum(g / math.log2(i + 2) for i, g in enumerate(gains[:k]))
    ideal = sum(g / math.log2(i + 2) for i, g in enumerate(sorted(gains, reverse=True)[:k]))
    return dcg / ideal if ideal > 0 else 0.0


def mean_ndcg_at(k, relevance_lists):
    if not relevance_lists:
        raise ValueError("no queries")
    return sum(ndcg_at(k, rels) for rels in relevance_lists) / len(relevance_lists)


@dataclass
class EvalReport:
    """Per-system summary metrics; ranking metrics are optional."""

    bleu: float
    rouge_su4: float
    mean_length: float
    mrr: float | None = None
    ndcg3: float | None = None
    ndcg5: float | None = None


def summarize_system(hypotheses, references):
    """BLEU, ROUGE-SU4, and mean hypothesis length for one system."""
    return EvalReport(
        bleu=bleu(hypotheses, references),
        rouge_su4=rouge_su4_corpus(hypotheses, references),
        mean_length=sum(len(h) for h in hypotheses) / len(hypotheses),
    )


def sampling_report(cells):
    """Rows (mode, K, BLEU-or-None) for the sampling-strategy comparison.

    `cells` maps (mode, K) to a (hypotheses, references) pair, or to None
    for configurations whose model is absent.
    """
    rows = []
    for (mode, k) in sorted(cells, key=lambda mk: (mk[0], mk[1])):
        pair = cells[(mode, k)]
        score = bleu(pair[0], pair[1]) if pair is not None else None
        rows.append((mode, k, score))
    return rows
