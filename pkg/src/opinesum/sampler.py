"""Encoder-input construction: pick text units from a cluster and collapse
them into one token sequence with SEG delimiters.

Training uses multinomial importance sampling (or uniform sampling as an
ablation); testing uses deterministic top-K. Selected units are always
ordered by descending score.
"""

from dataclasses import dataclass

import numpy as np

from .numkit import multinomial_draw

SCORE_FLOOR = 1e-6  # linear scores can be non-positive; multinomials cannot


@dataclass(frozen=True)
class ConcatenatedInput:
    """Token-level encoder input: unit (SEG unit)* with no trailing SEG."""

    indices: np.ndarray      # vocab ids, SEG between units
    tokens: tuple            # Token per position, None at SEG positions
    tfidf: np.ndarray        # per-position token tf-idf (0 at SEG)
    boundaries: tuple        # (start, end) index pairs, one per unit
    source_units: tuple      # original unit indices in concatenation order

    def __len__(self):
        return int(self.indices.shape[0])


def _order_by_score(chosen, scores):
    # descending score, ties by original unit index
    return sorted(chosen, key=lambda k: (-scores[k], k))


def build_input(cluster, unit_order, vocab, tfidf=None):
    """Concatenate the given units (already ordered) with SEG between them."""
    indices = []
    tokens = []
    weights = []
    boundaries = []
    for pos, k in enumerate(unit_order):
        unit = cluster.units[k]
        if pos > 0:
            indices.append(vocab.seg)
            tokens.append(None)
            weights.append(0.0)
        start = len(indices)
        unit_w = tfidf.unit_weights(unit) if tfidf is not None else {}
        for t in unit.tokens:
            indices.append(vocab.index_of(t.norm))
            tokens.append(t)
            weights.append(unit_w.get(t.norm, 0.0))
        boundaries.append((start, len(indices)))
    return ConcatenatedInput(
        indices=np.array(indices, dtype=np.int64),
        tokens=tuple(tokens),
        tfidf=np.array(weights, dtype=np.float64),
        boundaries=tuple(boundaries),
        source_units=tuple(unit_order),
    )


def sample_training_input(cluster, scores, K, rng, vocab, tfidf=None, replace=False):
    """Draw min(K, M) units from the normalized importance distribution.

    Scores are clamped at 1e-6 from below so every unit keeps support.
    Without replacement (default) the draws are sequential with
    renormalization; the drawn units are ordered by descending score.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] != len(cluster.units):
        raise ValueError("scores are not aligned with cluster units")
    if K < 1:
        raise ValueError("K must be >= 1")
    weights = np.maximum(scores, SCORE_FLOOR)
    k = min(int(K), len(cluster.units))
    if replace:
        probs = weights / weights.sum()
        cum = np.cumsum(probs)
        chosen = []
        for _ in range(k):
            r = rng.random()
            chosen.append(min(int(np.searchsorted(cum, r, side="right")), len(probs) - 1))
        chosen = sorted(set(chosen))
    else:
        chosen = multinomial_draw(weights, k, rng)
    return build_input(cluster, _order_by_score(chosen, scores), vocab, tfidf)


def uniform_training_input(cluster, K, rng, vocab, tfidf=None, replace=False):
    """Ablation sampler: equal weight on every unit."""
    ones = np.ones(len(cluster.units))
    return sample_training_input(cluster, ones, K, rng, vocab, tfidf, replace)


def select_test_input(cluster, scores, K, vocab, tfidf=None):
    """Deterministic top-min(K, M) units by score, descending, stable ties."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] != len(cluster.units):
        raise ValueError("scores are not aligned with cluster units")
    if K < 1:
        raise ValueError("K must be >= 1")
    k = min(int(K), len(cluster.units))
    order = sorted(range(len(cluster.units)), key=lambda i: (-scores[i], i))[:k]
    return build_input(cluster, order, vocab, tfidf)


def seg_count(concat, vocab):
    """Number of SEG delimiters in an input (= units - 1)."""
    return int(np.count_nonzero(concat.indices == vocab.seg))
