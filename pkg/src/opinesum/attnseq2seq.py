"""Attention encoder-decoder with exact reverse-mode gradients.

Forward pieces: LSTM cell, bidirectional encoder over the concatenated
input, additive attention, conditional decoder, and sequence
log-likelihood. backward_pass differentiates the whole composite by hand
(backpropagation through time); every activation needed for the backward
sweep is kept on a ForwardTrace.
"""

from dataclasses import dataclass, field

import numpy as np

from .numkit import log_softmax, sigmoid_elem, softmax
from .textcorpus import EmbeddingTable

CHANNELS = ("pos", "ner", "cap", "lex", "sent")

LSTM_FIELDS = (
    "W_iu", "W_ih", "W_ic", "b_i",
    "W_fu", "W_fh", "W_fc", "b_f",
    "W_cu", "W_ch", "b_c",
    "W_ou", "W_oh", "W_oc", "b_o",
)


class StaleTraceError(RuntimeError):
    """The model was mutated after the trace was recorded."""


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @staticmethod
    def zeros(d_h):
        return LstmState(h=np.zeros(d_h), c=np.zeros(d_h))


@dataclass
class LstmCellParams:
    """All projection matrices and biases of one LSTM cell.

    The cell-feedback matrices (W_ic, W_fc on the previous cell, W_oc on
    the new cell) are full d_h x d_h matrices.
    """

    W_iu: np.ndarray; W_ih: np.ndarray; W_ic: np.ndarray; b_i: np.ndarray
    W_fu: np.ndarray; W_fh: np.ndarray; W_fc: np.ndarray; b_f: np.ndarray
    W_cu: np.ndarray; W_ch: np.ndarray; b_c: np.ndarray
    W_ou: np.ndarray; W_oh: np.ndarray; W_oc: np.ndarray; b_o: np.ndarray

    @staticmethod
    def zeros(d_u, d_h):
        def uu():
            return np.zeros((d_h, d_u))

        def hh():
            return np.zeros((d_h, d_h))

        def b():
            return np.zeros(d_h)

        return LstmCellParams(
            W_iu=uu(), W_ih=hh(), W_ic=hh(), b_i=b(),
            W_fu=uu(), W_fh=hh(), W_fc=hh(), b_f=b(),
            W_cu=uu(), W_ch=hh(), b_c=b(),
            W_ou=uu(), W_oh=hh(), W_oc=hh(), b_o=b(),
        )

    @property
    def d_u(self):
        return self.W_iu.shape[1]

    @property
    def d_h(self):
        return self.W_iu.shape[0]

    def named(self, prefix):
        for f in LSTM_FIELDS:
            yield f"{prefix}.{f}", getattr(self, f)


@dataclass
class AttentionParams:
    W_cg: np.ndarray  # d_a x 2 d_h
    W_hg: np.ndarray  # d_a x d_h
    W_s: np.ndarray   # d_a

    @staticmethod
    def zeros(d_a, d_h):
        return AttentionParams(
            W_cg=np.zeros((d_a, 2 * d_h)), W_hg=np.zeros((d_a, d_h)), W_s=np.zeros(d_a)
        )


class TokenFeatureSet:
    """Discrete token-feature channels plus one continuous tf-idf slot.

    Channel row 0 is always the "absent" row. pos/ner/cap apply only to
    annotated encoder tokens; lex/sent are derived from the norm itself and
    therefore also apply to decoder-side (previous output word) lookups.
    """

    def __init__(self, pos_tags=(), lexicon=None, sentiment=None, dim=10):
        self.dim = int(dim)
        self.pos_tags = tuple(sorted(set(pos_tags)))
        self._pos_index = {t: i + 1 for i, t in enumerate(self.pos_tags)}
        lexicon = lexicon or {}
        self.lex_categories = tuple(sorted({c for cs in lexicon.values() for c in cs}))
        self._lex_index = {c: i + 1 for i, c in enumerate(self.lex_categories)}
        # a multi-category word uses its alphabetically first category
        self.word_lex = {w: sorted(cs)[0] for w, cs in lexicon.items() if cs}
        self.word_sent = dict(sentiment or {})
        self._sent_index = {"positive": 1, "negative": 2, "neutral": 3}

    @classmethod
    def from_resolved(cls, pos_tags, lex_categories, word_lex, word_sent, dim):
        """Rebuild from serialized form, where word->category is already
        resolved and the category list is explicit (it may contain
        categories no word resolves to)."""
        fs = cls(pos_tags=pos_tags, dim=dim)
        fs.lex_categories = tuple(lex_categories)
        fs._lex_index = {c: i + 1 for i, c in enumerate(fs.lex_categories)}
        fs.word_lex = dict(word_lex)
        fs.word_sent = dict(word_sent)
        return fs

    @property
    def continuous_slots(self):
        return 1

    @property
    def feature_dim(self):
        return len(CHANNELS) * self.dim + self.continuous_slots

    def table_rows(self):
        return {
            "pos": len(self.pos_tags) + 1,
            "ner": 2,
            "cap": 2,
            "lex": len(self.lex_categories) + 1,
            "sent": 4,
        }

    def encode_ids(self, token):
        """Channel row ids for an annotated encoder token (None for SEG)."""
        if token is None:
            return np.zeros(len(CHANNELS), dtype=np.int64)
        return np.array(
            [
                self._pos_index.get(token.pos, 0),
                1 if token.ner else 0,
                1 if token.surface[:1].isupper() else 0,
                self._lex_index.get(self.word_lex.get(token.norm), 0),
                self._sent_index.get(self.word_sent.get(token.norm), 0),
            ],
            dtype=np.int64,
        )

    def decode_ids(self, norm):
        """Channel row ids for a previous-output word (norm only)."""
        return np.array(
            [
                0,
                0,
                0,
                self._lex_index.get(self.word_lex.get(norm), 0),
                self._sent_index.get(self.word_sent.get(norm), 0),
            ],
            dtype=np.int64,
        )


@dataclass
class ModelParams:
    """Every trainable tensor plus the vocabulary and feature registry."""

    vocab: object
    features: TokenFeatureSet | None
    embeddings: EmbeddingTable
    feat_tables: dict
    enc_f: LstmCellParams
    enc_b: LstmCellParams
    dec: LstmCellParams
    attn: AttentionParams
    W_out: np.ndarray
    b_out: np.ndarray
    version: int = 0

    @property
    def d_emb(self):
        return self.embeddings.matrix.shape[1]

    @property
    def d_h(self):
        return self.dec.d_h

    @property
    def d_a(self):
        return self.attn.W_s.shape[0]

    @property
    def token_dim(self):
        extra = self.features.feature_dim if self.features else 0
        return self.d_emb + extra

    def named_tensors(self):
        """Stable (name, array) iteration over every trainable tensor."""
        yield "emb", self.embeddings.matrix
        if self.features:
            for ch in CHANNELS:
                yield f"feat.{ch}", self.feat_tables[ch]
        yield from self.enc_f.named("enc_f")
        yield from self.enc_b.named("enc_b")
        yield from self.dec.named("dec")
        yield "attn.W_cg", self.attn.W_cg
        yield "attn.W_hg", self.attn.W_hg
        yield "attn.W_s", self.attn.W_s
        yield "W_out", self.W_out
        yield "b_out", self.b_out

    def zero_grads(self):
        return {name: np.zeros_like(arr) for name, arr in self.named_tensors()}

    def snapshot(self):
        """Deep copy of all tensors (vocab/features are immutable, shared)."""
        copy = new_model(
            self.vocab, self.features, self.d_emb, self.d_h, self.d_a
        )
        for (_, dst), (_, src) in zip(copy.named_tensors(), self.named_tensors()):
            dst[...] = src
        copy.embeddings.trainable[...] = self.embeddings.trainable
        copy.embeddings.covered[...] = self.embeddings.covered
        return copy


def new_model(vocab, features, d_emb, d_h, d_a):
    """Zero-initialized parameter set with consistent dimensions."""
    extra = features.feature_dim if features else 0
    d_x = d_emb + extra
    feat_tables = {}
    if features:
        for ch, rows in features.table_rows().items():
            feat_tables[ch] = np.zeros((rows, features.dim))
    return ModelParams(
        vocab=vocab,
        features=features,
        embeddings=EmbeddingTable.zeros(len(vocab), d_emb),
        feat_tables=feat_tables,
        enc_f=LstmCellParams.zeros(d_x, d_h),
        enc_b=LstmCellParams.zeros(d_x, d_h),
        dec=LstmCellParams.zeros(d_x + 2 * d_h, d_h),
        attn=AttentionParams.zeros(d_a, d_h),
        W_out=np.zeros((len(vocab), d_h)),
        b_out=np.zeros(len(vocab)),
    )


# ---------------------------------------------------------------------------
# forward


@dataclass
class _StepCache:
    u: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    h: np.ndarray


def _lstm_forward(p, u, prev):
    i = sigmoid_elem(p.W_iu @ u + p.W_ih @ prev.h + p.W_ic @ prev.c + p.b_i)
    f = sigmoid_elem(p.W_fu @ u + p.W_fh @ prev.h + p.W_fc @ prev.c + p.b_f)
    g = np.tanh(p.W_cu @ u + p.W_ch @ prev.h + p.b_c)
    c = f * prev.c + i * g
    # the output gate sees the NEW cell
    o = sigmoid_elem(p.W_ou @ u + p.W_oh @ prev.h + p.W_oc @ c + p.b_o)
    h = o * np.tanh(c)
    cache = _StepCache(u=u, h_prev=prev.h, c_prev=prev.c, i=i, f=f, g=g, o=o, c=c, h=h)
    return LstmState(h=h, c=c), cache


def lstm_step(params, u, prev):
    """One LSTM update; returns the new (h, c) state."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (params.d_u,):
        raise ValueError(f"lstm_step input shape {u.shape}, expected ({params.d_u},)")
    if prev.h.shape != (params.d_h,) or prev.c.shape != (params.d_h,):
        raise ValueError("lstm_step state shape mismatch")
    state, _ = _lstm_forward(params, u, prev)
    return state


def _token_repr(model, index, feat_ids, tfidf_val):
    parts = [model.embeddings.matrix[index]]
    if model.features:
        for ch, fid in zip(CHANNELS, feat_ids):
            parts.append(model.feat_tables[ch][fid])
        parts.append(np.array([tfidf_val]))
    return np.concatenate(parts)


@dataclass
class _EncTrace:
    z: object
    ids: list
    reprs: list
    fwd: list
    bwd: list
    contexts: np.ndarray


def _encode_trace(model, z):
    n = len(z)
    if n < 1:
        raise ValueError("encoder input is empty")
    indices = z.indices
    if indices.min() < 0 or indices.max() >= len(model.vocab):
        raise ValueError("encoder input contains an invalid token index")
    ids = []
    reprs = []
    for t in range(n):
        feat_ids = model.features.encode_ids(z.tokens[t]) if model.features else None
        ids.append(feat_ids)
        reprs.append(_token_repr(model, indices[t], feat_ids, z.tfidf[t]))
    d_h = model.d_h
    fwd = []
    state = LstmState.zeros(d_h)
    h_f = np.empty((n, d_h))
    for t in range(n):
        state, cache = _lstm_forward(model.enc_f, reprs[t], state)
        fwd.append(cache)
        h_f[t] = state.h
    bwd = []
    state = LstmState.zeros(d_h)
    h_b = np.empty((n, d_h))
    for j in range(n):
        pos = n - 1 - j  # feed the input in reverse order
        state, cache = _lstm_forward(model.enc_b, reprs[pos], state)
        bwd.append(cache)
        h_b[pos] = state.h
    contexts = np.concatenate([h_f, h_b], axis=1)
    return _EncTrace(z=z, ids=ids, reprs=reprs, fwd=fwd, bwd=bwd, contexts=contexts)


def encode(model, z):
    """Context vectors b_1..b_n: concatenated forward/backward states."""
    return _encode_trace(model, z).contexts


@dataclass
class _AttnCache:
    t: np.ndarray
    a: np.ndarray
    s: np.ndarray


def _attend(model, contexts, h_prev):
    q = contexts @ model.attn.W_cg.T + model.attn.W_hg @ h_prev  # n x d_a
    t = np.tanh(q)
    e = t @ model.attn.W_s
    a = softmax(e)
    s = a @ contexts
    return _AttnCache(t=t, a=a, s=s)


def attend(model, contexts, h_prev):
    """Attention coefficients and the weighted context sum."""
    if len(contexts) == 0:
        raise ValueError("attend needs at least one context vector")
    cache = _attend(model, contexts, h_prev)
    return cache.a, cache.s


@dataclass
class _DecStepCache:
    input_index: int
    input_ids: np.ndarray | None
    attn: _AttnCache
    lstm: _StepCache
    probs: np.ndarray
    target: int | None = None


def _decode_core(model, y_prev_index, state_prev, contexts):
    attn_cache = _attend(model, contexts, state_prev.h)
    feat_ids = (
        model.features.decode_ids(model.vocab.word_of(y_prev_index))
        if model.features
        else None
    )
    rep = _token_repr(model, y_prev_index, feat_ids, 0.0)
    u = np.concatenate([rep, attn_cache.s])
    state, lstm_cache = _lstm_forward(model.dec, u, state_prev)
    logits = model.W_out @ state.h + model.b_out
    return state, logits, _DecStepCache(
        input_index=int(y_prev_index),
        input_ids=feat_ids,
        attn=attn_cache,
        lstm=lstm_cache,
        probs=softmax(logits),
    )


def decode_step(model, y_prev_index, state_prev, contexts):
    """One conditional decoder step: (new state, word distribution, attention)."""
    y_prev_index = int(y_prev_index)
    if not 0 <= y_prev_index < len(model.vocab):
        raise ValueError(f"token index {y_prev_index} out of vocabulary")
    state, _, cache = _decode_core(model, y_prev_index, state_prev, contexts)
    return state, cache.probs, cache.attn.a


@dataclass
class ForwardTrace:
    """Everything backward_pass needs to replay one (z, y) example."""

    model_id: int
    version: int
    enc: _EncTrace
    steps: list
    loglik: float = 0.0
    targets: list = field(default_factory=list)


def sequence_log_prob(model, z, y):
    """Conditional log-likelihood of target sequence y given input z.

    The decoder starts from zero states and consumes BOS before the first
    target; y itself must end with EOS. Returns (loglik, trace).
    """
    y = [int(t) for t in y]
    if not y:
        raise ValueError("target sequence is empty")
    if y[-1] != model.vocab.eos:
        raise ValueError("target sequence must end with EOS")
    for t in y:
        if not 0 <= t < len(model.vocab):
            raise ValueError(f"token index {t} out of vocabulary")
    enc = _encode_trace(model, z)
    state = LstmState.zeros(model.d_h)
    inputs = [model.vocab.bos] + y[:-1]
    loglik = 0.0
    steps = []
    for inp, target in zip(inputs, y):
        state, logits, cache = _decode_core(model, inp, state, enc.contexts)
        cache.target = target
        loglik += float(log_softmax(logits)[target])
        steps.append(cache)
    return loglik, ForwardTrace(
        model_id=id(model),
        version=model.version,
        enc=enc,
        steps=steps,
        loglik=loglik,
        targets=y,
    )


# ---------------------------------------------------------------------------
# backward


def _lstm_backward(params, prefix, cache, dh, dc_in, grads):
    """One step of LSTM BPTT; returns (du, dh_prev, dc_prev)."""
    tanh_c = np.tanh(cache.c)
    do = dh * tanh_c
    da_o = do * cache.o * (1.0 - cache.o)
    dc = dh * cache.o * (1.0 - tanh_c * tanh_c) + dc_in + params.W_oc.T @ da_o
    di = dc * cache.g
    da_i = di * cache.i * (1.0 - cache.i)
    df = dc * cache.c_prev
    da_f = df * cache.f * (1.0 - cache.f)
    dg = dc * cache.i
    da_g = dg * (1.0 - cache.g * cache.g)

    grads[f"{prefix}.W_iu"] += np.outer(da_i, cache.u)
    grads[f"{prefix}.W_ih"] += np.outer(da_i, cache.h_prev)
    grads[f"{prefix}.W_ic"] += np.outer(da_i, cache.c_prev)
    grads[f"{prefix}.b_i"] += da_i
    grads[f"{prefix}.W_fu"] += np.outer(da_f, cache.u)
    grads[f"{prefix}.W_fh"] += np.outer(da_f, cache.h_prev)
    grads[f"{prefix}.W_fc"] += np.outer(da_f, cache.c_prev)
    grads[f"{prefix}.b_f"] += da_f
    grads[f"{prefix}.W_cu"] += np.outer(da_g, cache.u)
    grads[f"{prefix}.W_ch"] += np.outer(da_g, cache.h_prev)
    grads[f"{prefix}.b_c"] += da_g
    grads[f"{prefix}.W_ou"] += np.outer(da_o, cache.u)
    grads[f"{prefix}.W_oh"] += np.outer(da_o, cache.h_prev)
    grads[f"{prefix}.W_oc"] += np.outer(da_o, cache.c)
    grads[f"{prefix}.b_o"] += da_o

    du = (
        params.W_iu.T @ da_i
        + params.W_fu.T @ da_f
        + params.W_cu.T @ da_g
        + params.W_ou.T @ da_o
    )
    dh_prev = (
        params.W_ih.T @ da_i
        + params.W_fh.T @ da_f
        + params.W_ch.T @ da_g
        + params.W_oh.T @ da_o
    )
    dc_prev = dc * cache.f + params.W_ic.T @ da_i + params.W_fc.T @ da_f
    return du, dh_prev, dc_prev


def _attend_backward(model, grads, contexts, cache, ds, db, h_prev):
    """Backward through one attention application; accumulates into db."""
    da = contexts @ ds
    db += np.outer(cache.a, ds)
    de = cache.a * (da - float(cache.a @ da))
    grads["attn.W_s"] += cache.t.T @ de
    dt = np.outer(de, model.attn.W_s)
    dq = dt * (1.0 - cache.t * cache.t)
    grads["attn.W_cg"] += dq.T @ contexts
    dq_sum = dq.sum(axis=0)
    grads["attn.W_hg"] += np.outer(dq_sum, h_prev)
    db += dq @ model.attn.W_cg
    return model.attn.W_hg.T @ dq_sum


def _repr_backward(model, grads, index, feat_ids, d_rep):
    d_emb = model.d_emb
    grads["emb"][index] += d_rep[:d_emb]
    if model.features:
        off = d_emb
        dim = model.features.dim
        for ch, fid in zip(CHANNELS, feat_ids):
            grads[f"feat.{ch}"][fid] += d_rep[off : off + dim]
            off += dim
        # the trailing continuous slot is an input, not a parameter


def backward_pass(model, trace, scale=1.0):
    """Exact gradients of scale * (-loglik) w.r.t. every parameter tensor.

    Rows of the embedding/feature tables not touched by the example keep an
    exactly zero gradient.
    """
    if trace.model_id != id(model) or trace.version != model.version:
        raise StaleTraceError("trace is stale: model parameters changed since the forward pass")
    grads = model.zero_grads()
    d_h = model.d_h
    token_dim = model.token_dim
    contexts = trace.enc.contexts
    n = contexts.shape[0]
    db = np.zeros((n, 2 * d_h))

    dh_next = np.zeros(d_h)
    dc_next = np.zeros(d_h)
    for step in reversed(trace.steps):
        dlogits = step.probs * scale
        dlogits[step.target] -= scale
        grads["W_out"] += np.outer(dlogits, step.lstm.h)
        grads["b_out"] += dlogits
        dh = model.W_out.T @ dlogits + dh_next
        du, dh_prev_l, dc_next = _lstm_backward(model.dec, "dec", step.lstm, dh, dc_next, grads)
        _repr_backward(model, grads, step.input_index, step.input_ids, du[:token_dim])
        dh_prev_a = _attend_backward(
            model, grads, contexts, step.attn, du[token_dim:], db, h_prev=step.lstm.h_prev
        )
        dh_next = dh_prev_l + dh_prev_a

    dh_f = db[:, :d_h]
    dh_b = db[:, d_h:]
    dh_next = np.zeros(d_h)
    dc_next = np.zeros(d_h)
    for t in range(n - 1, -1, -1):
        du, dh_next, dc_next = _lstm_backward(
            model.enc_f, "enc_f", trace.enc.fwd[t], dh_f[t] + dh_next, dc_next, grads
        )
        _repr_backward(model, grads, trace.enc.z.indices[t], trace.enc.ids[t], du)
    dh_next = np.zeros(d_h)
    dc_next = np.zeros(d_h)
    for j in range(n - 1, -1, -1):
        pos = n - 1 - j  # backward-chain step j consumed position n-1-j
        du, dh_next, dc_next = _lstm_backward(
            model.enc_b, "enc_b", trace.enc.bwd[j], dh_b[pos] + dh_next, dc_next, grads
        )
        _repr_backward(model, grads, trace.enc.z.indices[pos], trace.enc.ids[pos], du)
    return grads


# ---------------------------------------------------------------------------
# serialization


def _write_tensor(fh, name, arr):
    arr = np.atleast_2d(arr)
    fh.write(f"tensor {name} {arr.shape[0]} {arr.shape[1]}\n")
    for row in arr:
        fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def save_model(model, path):
    """Versioned text container; round-trips values exactly (17 sig digits)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("opinesum-model v1\n")
        fh.write(f"dims {model.d_emb} {model.d_h} {model.d_a}\n")
        fh.write(f"vocab {len(model.vocab)}\n")
        for w in model.vocab.words:
            fh.write(w + "\n")
        if model.features is None:
            fh.write("features none\n")
        else:
            fs = model.features
            fh.write("features v1\n")
            fh.write(f"dim {fs.dim}\n")
            fh.write(f"pos_tags {len(fs.pos_tags)}\n")
            for t in fs.pos_tags:
                fh.write(t + "\n")
            fh.write(f"lex_categories {len(fs.lex_categories)}\n")
            for c in fs.lex_categories:
                fh.write(c + "\n")
            fh.write(f"word_lex {len(fs.word_lex)}\n")
            for w in sorted(fs.word_lex):
                fh.write(f"{w}\t{fs.word_lex[w]}\n")
            fh.write(f"word_sent {len(fs.word_sent)}\n")
            for w in sorted(fs.word_sent):
                fh.write(f"{w}\t{fs.word_sent[w]}\n")
        fh.write("trainable " + "".join("1" if x else "0" for x in model.embeddings.trainable) + "\n")
        fh.write("covered " + "".join("1" if x else "0" for x in model.embeddings.covered) + "\n")
        for name, arr in model.named_tensors():
            _write_tensor(fh, name, arr)


def load_model(path):
    """Rebuild a model (vocabulary, feature registry, tensors) from disk."""
    from .textcorpus import RESERVED, Vocabulary

    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "opinesum-model v1":
        raise ValueError(f"{path}: not a model file")
    pos = 1
    _, d_emb, d_h, d_a = lines[pos].split()
    d_emb, d_h, d_a = int(d_emb), int(d_h), int(d_a)
    pos += 1
    n_vocab = int(lines[pos].split()[1])
    words = lines[pos + 1 : pos + 1 + n_vocab]
    if tuple(words[: len(RESERVED)]) != RESERVED:
        raise ValueError(f"{path}: reserved token block is corrupt")
    vocab = Vocabulary(words[len(RESERVED) :])
    pos += 1 + n_vocab
    features = None
    if lines[pos] == "features v1":
        pos += 1
        dim = int(lines[pos].split()[1])
        pos += 1
        n_tags = int(lines[pos].split()[1])
        tags = lines[pos + 1 : pos + 1 + n_tags]
        pos += 1 + n_tags
        n_cats = int(lines[pos].split()[1])
        cats = lines[pos + 1 : pos + 1 + n_cats]
        pos += 1 + n_cats
        n_lex = int(lines[pos].split()[1])
        word_lex = {}
        for ln in lines[pos + 1 : pos + 1 + n_lex]:
            w, _, c = ln.partition("\t")
            word_lex[w] = c
        pos += 1 + n_lex
        n_sent = int(lines[pos].split()[1])
        word_sent = {}
        for ln in lines[pos + 1 : pos + 1 + n_sent]:
            w, _, s = ln.partition("\t")
            word_sent[w] = s
        pos += 1 + n_sent
        features = TokenFeatureSet.from_resolved(tags, cats, word_lex, word_sent, dim)
    elif lines[pos] == "features none":
        pos += 1
    else:
        raise ValueError(f"{path}: expected a features block")
    trainable = np.array([ch == "1" for ch in lines[pos].split()[1]], dtype=bool)
    covered = np.array([ch == "1" for ch in lines[pos + 1].split()[1]], dtype=bool)
    pos += 2
    model = new_model(vocab, features, d_emb, d_h, d_a)
    model.embeddings.trainable[...] = trainable
    model.embeddings.covered[...] = covered
    tensors = dict(model.named_tensors())
    while pos < len(lines) and lines[pos]:
        _, name, rows, cols = lines[pos].split()
        rows, cols = int(rows), int(cols)
        if name not in tensors:
            raise ValueError(f"{path}: unknown tensor {name}")
        values = np.array(
            [[float(x) for x in lines[pos + 1 + r].split()] for r in range(rows)]
        )
        target = tensors[name]
        target[...] = values.reshape(target.shape)
        pos += 1 + rows
    return model
