"""Beam-search n-best generation, cosine re-ranking against the input
units, and final summary assembly with entity restoration."""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .attnseq2seq import LstmState, decode_step, encode
from .sampler import select_test_input
from .textcorpus import (
    TfidfStats,
    content_words,
    cosine_weight_maps,
    default_stopwords,
    detokenize,
    restore_entity,
    substitute_entity,
)


@dataclass(frozen=True)
class BeamHypothesis:
    """Partial or complete output sequence (tokens start after BOS)."""

    tokens: tuple
    logp: float
    state: LstmState
    completed: bool


def banned_indices(vocab, cluster=None):
    """Vocabulary ids never expanded: SEG, BOS, and the generic entity
    label when the cluster has no entity to restore it to."""
    banned = {vocab.seg, vocab.bos}
    if cluster is None or not cluster.entity:
        banned.add(vocab.entity)
    return banned


def beam_search(model, z, width, max_len, banned=None):
    """Top-`width` beam search; returns completed hypotheses, best first.

    Each step expands every live hypothesis over the full vocabulary and
    keeps the top-`width` expansions; completed ones among those move to
    the result pool. Stops when nothing is live or at max_len, where the
    survivors are force-completed with EOS (at its actual log-prob).
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    vocab = model.vocab
    banned_set = set(banned) if banned is not None else {vocab.seg, vocab.bos}
    banned_set.discard(vocab.eos)
    allowed = [i for i in range(len(vocab)) if i not in banned_set]
    contexts = encode(model, z)
    live = [BeamHypothesis((), 0.0, LstmState.zeros(model.d_h), False)]
    pool = []
    for step in range(1, max_len + 1):
        candidates = []
        for hyp in live:
            prev = hyp.tokens[-1] if hyp.tokens else vocab.bos
            state, probs, _ = decode_step(model, prev, hyp.state, contexts)
            with np.errstate(divide="ignore"):  # underflowed probs rank last
                logp = np.log(probs)
            expansion = (vocab.eos,) if step == max_len else allowed
            for w in expansion:
                candidates.append(
                    BeamHypothesis(
                        tokens=hyp.tokens + (w,),
                        logp=hyp.logp + float(logp[w]),
                        state=state,
                        completed=w == vocab.eos,
                    )
                )
        candidates.sort(key=lambda h: (-h.logp, h.tokens))
        live = []
        for h in candidates[:width]:
            (pool if h.completed else live).append(h)
        if not live:
            break
    pool.sort(key=lambda h: (-h.logp, len(h.tokens), h.tokens))
    return pool


def greedy_decode(model, z, max_len, banned=None):
    """Step-wise argmax chain (beam of width 1)."""
    return beam_search(model, z, width=1, max_len=max_len, banned=banned)[0]


def _content_map(norms, stopwords, idf):
    counts = Counter(content_words(norms, stopwords))
    return {term: k * idf(term) for term, k in counts.items()}


def rerank_similarities(nbest, cluster, tfidf, stopwords, vocab):
    """IDF-weighted content-word cosine of each candidate against the
    concatenated input units; candidates containing UNK are halved."""
    input_norms = [t.norm for u in cluster.units for t in u.tokens]
    input_map = _content_map(input_norms, stopwords, tfidf.idf)
    sims = []
    for hyp in nbest:
        norms = [vocab.word_of(t) for t in hyp.tokens if t != vocab.eos]
        sim = cosine_weight_maps(_content_map(norms, stopwords, tfidf.idf), input_map)
        if any(t == vocab.unk for t in hyp.tokens):
            sim *= 0.5
        sims.append(sim)
    return sims


def cosine_rerank(nbest, cluster, tfidf, stopwords, vocab):
    """Best hypothesis by input cosine; ties broken by higher log-prob."""
    if not nbest:
        raise ValueError("empty n-best list")
    sims = rerank_similarities(nbest, cluster, tfidf, stopwords, vocab)
    best = max(range(len(nbest)), key=lambda i: (sims[i], nbest[i].logp, -i))
    return nbest[best]


def decode_cluster(
    model, cluster, scores, K, width, max_len, tfidf=None, stopwords=None
):
    """Full decode of one cluster; returns the record written by the CLI.

    select_test_input -> beam_search -> cosine_rerank -> restore_entity.
    """
    vocab = model.vocab
    sub = substitute_entity(cluster)
    if tfidf is None:
        tfidf = TfidfStats([sub])
    if stopwords is None:
        stopwords = default_stopwords()
    z = select_test_input(sub, scores, K, vocab, tfidf)
    nbest = beam_search(model, z, width, max_len, banned_indices(vocab, sub))
    sims = rerank_similarities(nbest, sub, tfidf, stopwords, vocab)
    best = max(range(len(nbest)), key=lambda i: (sims[i], nbest[i].logp, -i))

    def text_of(hyp):
        norms = [vocab.word_of(t) for t in hyp.tokens[:-1]]
        return detokenize(restore_entity(norms, cluster))

    return {
        "id": cluster.id,
        "summary": text_of(nbest[best]),
        "nbest": [
            {"text": text_of(h), "logp": h.logp, "cosine": s}
            for h, s in zip(nbest, sims)
        ],
    }


def generate_summary(model, cluster, scores, K, width, max_len, tfidf=None, stopwords=None):
    """One-sentence abstract for a cluster (text, entity restored)."""
    return decode_cluster(model, cluster, scores, K, width, max_len, tfidf, stopwords)[
        "summary"
    ]
