"""Abstractive opinion summarization: a bidirectional-LSTM attention
encoder-decoder trained from scratch over multiple input text units, with
closed-form importance estimation for input sampling, beam-search decoding
with cosine re-ranking, and standard summarization/ranking metrics."""

from . import (
    attnseq2seq,
    beamdecode,
    evalmetrics,
    numkit,
    salience,
    sampler,
    textcorpus,
    trainer,
)

__all__ = [
    "attnseq2seq",
    "beamdecode",
    "evalmetrics",
    "numkit",
    "salience",
    "sampler",
    "textcorpus",
    "trainer",
]

__version__ = "0.1.0"
