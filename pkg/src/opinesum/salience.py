"""Text-unit importance estimation.

Feature extraction over text units, overlap-based gold labels, the
preference-regularized ridge regression with its closed-form solve,
scoring, baseline rankers, and grid search over the two hyperparameters.
"""

import csv
import hashlib
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .evalmetrics import mrr
from .textcorpus import TfidfStats, content_norms, cosine_weight_maps

SENTIMENT_CATEGORIES = ("positive", "negative", "neutral")

DENSE_NAMES = (
    "num_words",
    "num_pos_tags",
    "num_ner_tokens",
    "centroidness",
    "avg_tfidf",
    "max_tfidf",
)


@dataclass(frozen=True)
class LexiconSet:
    """Lexicon inputs for feature extraction.

    general: norm -> categories (General Inquirer / MPQA style);
    sentiment: norm -> positive|negative|neutral; stopwords define content words.
    """

    general: dict = field(default_factory=dict)
    sentiment: dict = field(default_factory=dict)
    stopwords: frozenset = frozenset()


@dataclass(frozen=True)
class FeatureRegistry:
    """Shared feature-name registry: dense block, lexicon categories,
    sentiment counts, then the top-U training content unigrams."""

    lexicon_categories: tuple
    top_unigrams: tuple

    @property
    def names(self):
        return (
            DENSE_NAMES
            + tuple(f"lex:{c}" for c in self.lexicon_categories)
            + tuple(f"sent:{c}" for c in SENTIMENT_CATEGORIES)
            + tuple(f"unigram:{w}" for w in self.top_unigrams)
        )

    @property
    def d(self):
        return len(self.names)

    def digest(self):
        text = "\x1f".join(self.names)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def build_registry(train_clusters, lexicons, top_u=500):
    """Registry from the training corpus: lexicon categories plus the
    top-U most frequent content unigrams (ties broken lexicographically)."""
    cats = sorted({c for cs in lexicons.general.values() for c in cs})
    counts = Counter()
    for cluster in train_clusters:
        for unit in cluster.units:
            counts.update(content_norms(unit, lexicons.stopwords))
    top = sorted(counts, key=lambda w: (-counts[w], w))[:top_u]
    return FeatureRegistry(lexicon_categories=tuple(cats), top_unigrams=tuple(top))


def centroidness(unit, cluster, tfidf):
    """Cosine of the unit's TF-IDF vector with the cluster's mean TF-IDF vector."""
    uw = tfidf.unit_weights(unit)
    mean = Counter()
    for other in cluster.units:
        for term, w in tfidf.unit_weights(other).items():
            mean[term] += w / len(cluster.units)
    return cosine_weight_maps(uw, mean)


def extract_features(unit, cluster, registry, lexicons, tfidf):
    """Table-style feature vector for one unit within its cluster."""
    vec = np.zeros(registry.d)
    weights = tfidf.unit_weights(unit)
    vec[0] = len(unit.tokens)
    vec[1] = len({t.pos for t in unit.tokens if t.pos})
    vec[2] = sum(1 for t in unit.tokens if t.ner)
    vec[3] = centroidness(unit, cluster, tfidf)
    if weights:
        vals = list(weights.values())
        vec[4] = sum(vals) / len(vals)
        vec[5] = max(vals)
    off = len(DENSE_NAMES)
    cat_index = {c: i for i, c in enumerate(registry.lexicon_categories)}
    for t in unit.tokens:
        for c in lexicons.general.get(t.norm, ()):
            if c in cat_index:
                vec[off + cat_index[c]] += 1
    off += len(registry.lexicon_categories)
    sent_index = {c: i for i, c in enumerate(SENTIMENT_CATEGORIES)}
    for t in unit.tokens:
        pol = lexicons.sentiment.get(t.norm)
        if pol in sent_index:
            vec[off + sent_index[pol]] += 1
    off += len(SENTIMENT_CATEGORIES)
    uni_index = {w: i for i, w in enumerate(registry.top_unigrams)}
    for norm in content_norms(unit, lexicons.stopwords):
        i = uni_index.get(norm)
        if i is not None:
            vec[off + i] += 1
    return vec


def cluster_features(cluster, registry, lexicons, tfidf):
    """M x d matrix of features for all units of one cluster."""
    return np.stack(
        [extract_features(u, cluster, registry, lexicons, tfidf) for u in cluster.units]
    )


def gold_scores(cluster, stopwords):
    """Overlap-based gold importance in [0, 1]^M.

    raw_k = |content-word types shared by unit k and the summary|,
    normalized by the cluster maximum; an all-zero cluster stays zero.
    """
    summary_words = set(content_norms(cluster.summary, stopwords))
    raw = np.array(
        [len(set(content_norms(u, stopwords)) & summary_words) for u in cluster.units],
        dtype=np.float64,
    )
    top = raw.max() if raw.size else 0.0
    return raw / top if top > 0 else raw


@dataclass
class PreferenceDesign:
    """Stacked regression design: R w ~ L plus preference rows R' w ~ 1."""

    R: np.ndarray
    L: np.ndarray
    Rprime: np.ndarray
    Lprime: np.ndarray


def build_design(features_per_cluster, labels_per_cluster):
    """Assemble the design from per-cluster feature matrices and labels.

    Preference rows are all within-cluster (p, q) differences r_p - r_q
    with l_p > 0 and l_q = 0.
    """
    if len(features_per_cluster) != len(labels_per_cluster):
        raise ValueError("features and labels are misaligned")
    blocks = []
    labels = []
    pair_rows = []
    for feats, labs in zip(features_per_cluster, labels_per_cluster):
        feats = np.atleast_2d(np.asarray(feats, dtype=np.float64))
        labs = np.asarray(labs, dtype=np.float64)
        if feats.shape[0] != labs.shape[0]:
            raise ValueError("cluster features and labels are misaligned")
        blocks.append(feats)
        labels.append(labs)
        pos = np.nonzero(labs > 0)[0]
        zero = np.nonzero(labs == 0)[0]
        for p in pos:
            for q in zero:
                pair_rows.append(feats[p] - feats[q])
    R = np.vstack(blocks)
    d = R.shape[1]
    Rprime = np.vstack(pair_rows) if pair_rows else np.zeros((0, d))
    return PreferenceDesign(
        R=R,
        L=np.concatenate(labels),
        Rprime=Rprime,
        Lprime=np.ones(Rprime.shape[0]),
    )


@dataclass
class SalienceModel:
    w: np.ndarray
    lam: float
    beta: float
    registry: FeatureRegistry | None = None


def objective(design, w, lam, beta):
    """J(w) = ||Rw - L||^2 + lam ||R'w - 1||^2 + beta ||w||^2."""
    w = np.asarray(w, dtype=np.float64)
    r = design.R @ w - design.L
    rp = design.Rprime @ w - design.Lprime
    return float(r @ r + lam * (rp @ rp) + beta * (w @ w))


def objective_gradient(design, w, lam, beta):
    """Analytic gradient of the objective at w."""
    w = np.asarray(w, dtype=np.float64)
    return (
        2.0 * design.R.T @ (design.R @ w - design.L)
        + 2.0 * lam * design.Rprime.T @ (design.Rprime @ w - design.Lprime)
        + 2.0 * beta * w
    )


def fit_closed_form(design, lam, beta, registry=None):
    """Minimize the objective exactly.

    Solves (R^T R + lam R'^T R' + beta I) w = R^T L + lam R'^T 1 through
    the SPD solver; beta > 0 makes the system positive-definite.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    d = design.R.shape[1]
    A = design.R.T @ design.R + lam * (design.Rprime.T @ design.Rprime) + beta * np.eye(d)
    rhs = design.R.T @ design.L + lam * (design.Rprime.T @ design.Lprime)
    w = numkit.solve_spd(A, rhs)
    return SalienceModel(w=w, lam=float(lam), beta=float(beta), registry=registry)


def score_units(model, features):
    """f(x^k) = r_k . w for each row of a feature matrix."""
    feats = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if feats.shape[1] != model.w.shape[0]:
        raise ValueError(
            f"feature dimension {feats.shape[1]} does not match model dimension {model.w.shape[0]}"
        )
    return feats @ model.w


def rank_descending(values):
    """Indices sorted by descending value; ties keep original order."""
    vals = np.asarray(values, dtype=np.float64)
    return list(np.argsort(-vals, kind="stable"))


def baseline_rank(kind, cluster, tfidf=None):
    """Rank unit indices by a baseline: 'length' or 'centroid'."""
    if kind == "length":
        return rank_descending([len(u.tokens) for u in cluster.units])
    if kind == "centroid":
        stats = tfidf if tfidf is not None else TfidfStats([cluster])
        return rank_descending([centroidness(u, cluster, stats) for u in cluster.units])
    raise ValueError(f"unknown baseline kind: {kind!r}")


def save_model(model, path):
    """Text format: header (d, lambda, beta, registry hash), then weights."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("salience-model v1\n")
        fh.write(f"d {model.w.shape[0]}\n")
        fh.write(f"lambda {format(model.lam, '.17g')}\n")
        fh.write(f"beta {format(model.beta, '.17g')}\n")
        fh.write(f"registry {model.registry.digest() if model.registry else 'none'}\n")
        for v in model.w:
            fh.write(format(v, ".17g") + "\n")


def load_model(path, registry=None):
    """Read a model file; verifies the registry hash when one is supplied."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "salience-model v1":
        raise ValueError(f"{path}: not a salience model file")
    header = {}
    for ln in lines[1:5]:
        key, _, val = ln.partition(" ")
        header[key] = val
    d = int(header["d"])
    w = np.array([float(x) for x in lines[5 : 5 + d]])
    if w.shape[0] != d:
        raise ValueError(f"{path}: expected {d} weights, found {w.shape[0]}")
    if registry is not None and header["registry"] not in ("none", registry.digest()):
        raise ValueError(f"{path}: registry hash mismatch")
    return SalienceModel(
        w=w, lam=float(header["lambda"]), beta=float(header["beta"]), registry=registry
    )


def save_registry(registry, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("salience-registry v1\n")
        fh.write(f"lexicon_categories {len(registry.lexicon_categories)}\n")
        for c in registry.lexicon_categories:
            fh.write(c + "\n")
        fh.write(f"top_unigrams {len(registry.top_unigrams)}\n")
        for w in registry.top_unigrams:
            fh.write(w + "\n")


def load_registry(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "salience-registry v1":
        raise ValueError(f"{path}: not a registry file")
    pos = 1
    n_cats = int(lines[pos].split()[1])
    cats = tuple(lines[pos + 1 : pos + 1 + n_cats])
    pos += 1 + n_cats
    n_uni = int(lines[pos].split()[1])
    unis = tuple(lines[pos + 1 : pos + 1 + n_uni])
    return FeatureRegistry(lexicon_categories=cats, top_unigrams=unis)


def write_ranking_csv(rows, path):
    """Ranking report: (cluster_id, unit_index, score, rank) rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "unit_index", "score", "rank"])
        writer.writerows(rows)


def relevance_for_ranking(cluster, order, stopwords):
    """Binary gains in ranked order: a unit is relevant if it shares at
    least one content word with the gold summary."""
    summary_words = set(content_norms(cluster.summary, stopwords))
    rel = [
        1 if set(content_norms(cluster.units[i], stopwords)) & summary_words else 0
        for i in order
    ]
    return rel


def fit_with_grid_search(
    train_features,
    train_labels,
    dev_clusters,
    dev_features,
    lexicons,
    registry,
    lam_grid=(0.0, 0.01, 0.1, 0.5, 1.0, 10.0),
    beta_grid=(0.01, 0.1, 1.0, 10.0),
):
    """Fit on the training design for every (lambda, beta) pair and keep the
    model with the best dev MRR. Returns (model, grid rows for the CSV)."""
    design = build_design(train_features, train_labels)
    best = None
    rows = []
    for lam in lam_grid:
        for beta in beta_grid:
            model = fit_closed_form(design, lam, beta, registry=registry)
            rel_lists = []
            for cluster, feats in zip(dev_clusters, dev_features):
                order = rank_descending(score_units(model, feats))
                rel_lists.append(relevance_for_ranking(cluster, order, lexicons.stopwords))
            dev_mrr = mrr(rel_lists)
            rows.append((lam, beta, dev_mrr))
            if best is None or dev_mrr > best[0]:
                best = (dev_mrr, model)
    return best[1], rows
