import pytest

from opinesum.attnseq2seq import TokenFeatureSet, new_model
from opinesum.numkit import SeededRng
from opinesum.sampler import build_input
from opinesum.textcorpus import Cluster, build_vocab, text_unit


def make_cluster(texts, summary="great stuff", cid="c0", entity=None):
    return Cluster(
        id=cid,
        units=tuple(text_unit(t) for t in texts),
        summary=text_unit(summary),
        entity=entity,
    )


def randomize(model, seed=0, scale=0.3):
    rng = SeededRng(seed)
    for _, arr in model.named_tensors():
        arr[...] = rng.uniform(-scale, scale, arr.shape)
    return model


def tiny_setup(seed=0, with_features=False, d_emb=4, d_h=3, d_a=2, scale=0.3):
    """Small random model plus a 2-unit encoder input and a target."""
    cluster = make_cluster(["aa bb cc", "dd ee"], summary="bb dd")
    vocab = build_vocab([cluster])
    features = None
    if with_features:
        features = TokenFeatureSet(
            pos_tags=["nn", "vb"],
            lexicon={"aa": ("Positiv",), "dd": ("Negativ",)},
            sentiment={"bb": "positive", "ee": "negative"},
            dim=3,
        )
    model = randomize(new_model(vocab, features, d_emb, d_h, d_a), seed, scale)
    z = build_input(cluster, [0, 1], vocab)
    y = list(vocab.encode(cluster.summary.norms())) + [vocab.eos]
    return model, cluster, z, y


@pytest.fixture
def tiny():
    return tiny_setup()


@pytest.fixture
def tiny_feat():
    return tiny_setup(with_features=True)
