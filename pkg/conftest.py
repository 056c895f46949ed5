import os
import sys
import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "hseq"))

from hseq import corpus, encoder, decoder, model  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: toy training experiments taking minutes on one CPU core")


def make_vocab(n_words, prefix="w"):
    return corpus.Vocabulary(corpus.SPECIAL_TOKENS + ["{}{}".format(prefix, i) for i in range(n_words)])


def tiny_spec(role="coarse", n_words=12, hidden_dim=4, embed_dim=4, encoder_layers=2, decoder_layers=2,
              bidirectional_first=None, residual_layers=None, src_vocab=None, tgt_vocab=None):
    src_vocab = src_vocab if src_vocab is not None else make_vocab(n_words, "s" if role == "coarse" else "t")
    tgt_vocab = tgt_vocab if tgt_vocab is not None else (make_vocab(n_words, "t") if role == "coarse" else src_vocab)
    bidirectional_first = role == "coarse" if bidirectional_first is None else bidirectional_first
    residual_layers = ([encoder_layers - 1] if role == "coarse" and encoder_layers > 1 else []) \
        if residual_layers is None else residual_layers
    enc = encoder.EncoderConfig(num_layers=encoder_layers, hidden_dim=hidden_dim, embed_dim=embed_dim,
                                bidirectional_first=bidirectional_first, residual_layers=residual_layers)
    dec = decoder.DecoderConfig(num_layers=decoder_layers, hidden_dim=hidden_dim, embed_dim=embed_dim)
    return model.NetworkSpec(role, enc, dec, src_vocab, tgt_vocab)


def copy_pairs(n_pairs, n_words, min_len=3, max_len=6, seed=0):
    """SentencePairs whose target is the source with every s<i> mapped to t<i>"""
    rng = np.random.RandomState(seed)
    pairs = []
    for i in range(n_pairs):
        ids = rng.randint(0, n_words, size=rng.randint(min_len, max_len + 1))
        pairs.append(corpus.SentencePair(i, tuple("s{}".format(j) for j in ids), tuple("t{}".format(j) for j in ids)))
    return pairs


@pytest.fixture
def spec():
    return tiny_spec()


@pytest.fixture
def network(spec):
    return model.factory(spec, seed=7)


@pytest.fixture
def data_dir():
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


@pytest.fixture
def config_dir():
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")
