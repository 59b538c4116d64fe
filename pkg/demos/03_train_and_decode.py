"""Train the full attention encoder-decoder on a desk-sized corpus.

Five synthetic clusters, four reviews each. The model samples two units
per visit, trains with per-example Adagrad on exact BPTT gradients, and
early-stops on greedy dev BLEU. Decoding then runs the whole pipeline:
top-K selection, beam search, cosine re-ranking, entity restoration.
"""

import time

import numpy as np

from opinesum import beamdecode
from opinesum.textcorpus import (
    Cluster,
    TfidfStats,
    build_vocab,
    default_stopwords,
    detokenize,
    text_unit,
)
from opinesum.trainer import TrainConfig, train

FILLERS = ["film", "great", "fun", "drama", "story", "cast", "plot", "tone", "pace", "style"]
TOPICS = [
    ["mars", "astronaut", "rescue", "potato", "space", "crew"],
    ["ring", "quest", "wizard", "volcano", "hobbit", "sword"],
    ["shark", "beach", "panic", "summer", "water", "boat"],
    ["robot", "future", "machine", "steel", "circuit", "spark"],
    ["dance", "music", "stage", "rhythm", "glitter", "crowd"],
]

clusters = []
for i, words in enumerate(TOPICS):
    units = []
    for k in range(4):
        rotated = words[k:] + words[:k]
        units.append(text_unit(" ".join(rotated + [FILLERS[(2 * k + i) % 10], FILLERS[(2 * k + i + 1) % 10]])))
    clusters.append(Cluster(id=f"c{i}", units=tuple(units), summary=text_unit(" ".join(words))))

vocab = build_vocab(clusters)
print(f"corpus: {len(clusters)} clusters, vocabulary of {len(vocab)} entries")

config = TrainConfig(
    d_emb=32, d_h=32, d_a=16, K=2, mode="importance",
    eta=0.25, max_epochs=500, patience=60, seed=0, max_len=12,
)
scores = {c.id: np.ones(len(c.units)) for c in clusters}

start = time.perf_counter()
model, history = train(clusters, clusters, config, scores)
print(f"trained {len(history)} epochs in {time.perf_counter()-start:.1f}s")
for epoch, nll, dev_bleu in history[:3] + history[-3:]:
    print(f"   epoch {epoch:>3}  nll/example {nll:7.3f}  dev BLEU {dev_bleu:.3f}")
print(f"best dev BLEU: {max(h[2] for h in history):.3f}")

print("\ndecoding (beam width 5 + cosine re-rank):")
tfidf = TfidfStats(clusters)
stopwords = default_stopwords()
for c in clusters:
    text = beamdecode.generate_summary(model, c, scores[c.id], 2, 5, config.max_len, tfidf, stopwords)
    gold = detokenize(c.summary.norms())
    mark = "=" if text == gold else "!"
    print(f"   {c.id} [{mark}] {text!r}")

print("\nn-best detail for the first cluster:")
record = beamdecode.decode_cluster(model, clusters[0], scores["c0"], 2, 5, config.max_len, tfidf, stopwords)
for item in record["nbest"][:5]:
    print(f"   logp {item['logp']:8.3f}  cosine {item['cosine']:.3f}  {item['text']!r}")
