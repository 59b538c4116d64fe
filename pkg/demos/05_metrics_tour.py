"""The evaluation metrics, on examples small enough to verify by hand."""

import math

from opinesum.evalmetrics import bleu, mrr, ndcg_at, rouge_su4, skip_bigram_units

print("BLEU (corpus-level, clipped n-grams, +1 smoothing for n >= 2)")
hyp = "the cat sat on the mat".split()
ref = "the cat sat on a mat".split()
print(f"   hyp: {' '.join(hyp)!r}")
print(f"   ref: {' '.join(ref)!r}")
print("   by hand: p1=5/6, p2=4/6, p3=3/5, p4=2/4, no brevity penalty")
print(f"   expected (5/6 * 4/6 * 3/5 * 2/4)^(1/4) = {(5/6*4/6*3/5*2/4)**0.25:.6f}")
print(f"   bleu()                                 = {bleu([hyp], [ref]):.6f}")
print(f"   identical corpora -> {bleu([hyp], [list(hyp)]):.1f},  disjoint -> {bleu([['aa']], [['bb']]):.1f}")

short = bleu([["the", "cat"]], [["the", "cat", "sat", "on"]])
print(f"   2-token hyp vs 4-token ref gets brevity penalty exp(1-4/2): {short:.6f}")

print("\nROUGE-SU4 (recall of reference unigrams + skip-bigrams, gap <= 4)")
hyp = "a b d".split()
ref = "a b c d".split()
units = skip_bigram_units(ref)
print(f"   ref {' '.join(ref)!r} has {sum(units.values())} units: "
      f"{sorted(' '.join(u) for u in units)}")
print(f"   hyp {' '.join(hyp)!r} matches 6 of them -> recall {rouge_su4(hyp, ref):.1f}")

print("\nMRR (mean reciprocal rank of the first relevant item)")
queries = [[1, 0], [0, 0, 1], [0, 0]]
print(f"   queries {queries}: ranks 1, 3, none -> (1 + 1/3 + 0)/3 = {mrr(queries):.4f}")

print("\nNDCG@k (binary gains, log2 discount, normalized by the ideal)")
print(f"   gains [0,1] at k=2: (1/log2(3)) / 1 = {1/math.log2(3):.6f}")
print(f"   ndcg_at(2, [0,1])                   = {ndcg_at(2, [0, 1]):.6f}")
print(f"   all relevant -> {ndcg_at(3, [1,1,1]):.1f},  none -> {ndcg_at(3, [0,0,0]):.1f}")
