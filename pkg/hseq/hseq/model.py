"""
This module defines the network structures, the coarse (source to target) and
the fine (target to target) sequence-to-sequence networks, sharing one
encoder-decoder model with attention
"""

import collections
import numpy as np
import tensorflow as tf
from hseq import kernel, encoder, decoder
from hseq.corpus import Vocabulary, numericalize, denumericalize, pad_batch
from hseq.utils import DataError


def factory(spec, seed=1000, dtype="float32", init_scale=0.08, max_src_len=None):
    """build a randomly initialized network for a NetworkSpec"""
    return Seq2Seq(spec, seed=seed, dtype=dtype, init_scale=init_scale, max_src_len=max_src_len).build()


class NetworkSpec(object):
    """
    role (str): "coarse" (source -> target) or "fine" (target -> target)
    encoder_config (EncoderConfig), decoder_config (DecoderConfig)
    src_vocab, tgt_vocab (Vocabulary): the fine network is monolingual, its vocabularies are identical
    """

    def __init__(self, role, encoder_config, decoder_config, src_vocab, tgt_vocab):
        assert role in ["coarse", "fine"], NotImplementedError
        if role == "fine" and src_vocab != tgt_vocab:
            raise DataError("The fine network needs identical source and target vocabularies")
        self.role = role
        self.encoder_config = encoder_config
        self.decoder_config = decoder_config
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab

    @classmethod
    def from_config(cls, cfg, role, src_vocab, tgt_vocab):
        """network of a role described by a hseq.config.Config"""
        layers = cfg.network(role)
        encoder_config = encoder.EncoderConfig(num_layers=layers["encoder_layers"], hidden_dim=cfg.hidden_dim,
                                               embed_dim=cfg.embed_dim,
                                               bidirectional_first=layers["bidirectional_first"],
                                               residual_layers=layers["residual_layers"])
        decoder_config = decoder.DecoderConfig(num_layers=layers["decoder_layers"], hidden_dim=cfg.hidden_dim,
                                               embed_dim=cfg.embed_dim)
        return cls(role, encoder_config, decoder_config, src_vocab, tgt_vocab)

    def param_shapes(self):
        shapes = collections.OrderedDict()
        shapes.update(encoder.param_shapes(self.encoder_config, len(self.src_vocab)))
        shapes.update(decoder.param_shapes(self.decoder_config, len(self.tgt_vocab), self.encoder_config))
        return shapes

    def to_dict(self):
        return {
            "role": self.role,
            "encoder": self.encoder_config.to_dict(),
            "decoder": self.decoder_config.to_dict(),
            "src_vocab": self.src_vocab.tokens,
            "tgt_vocab": self.tgt_vocab.tokens,
        }

    @classmethod
    def from_dict(cls, content):
        return cls(content["role"], encoder.EncoderConfig(**content["encoder"]),
                   decoder.DecoderConfig(**content["decoder"]), Vocabulary(content["src_vocab"]),
                   Vocabulary(content["tgt_vocab"]))


class Seq2Seq(object):
    """encoder-decoder network with additive attention over the two-part memory"""

    def __init__(self, spec, seed=1000, dtype="float32", init_scale=0.08, max_src_len=None):
        self.spec = spec
        self.seed = seed
        self.dtype = kernel.get_dtype(dtype)
        self.init_scale = init_scale
        self.max_src_len = max_src_len
        self.params = {}

    def get_variables(self):
        """
        Initialize parameters uniformly in [-init_scale, init_scale]

        Mutates:
            self.params (dict): name -> tf.Variable, names as in NetworkSpec.param_shapes
        """
        rng = np.random.RandomState(self.seed)
        for name, shape in self.spec.param_shapes().items():
            self.params[name] = tf.Variable(kernel.uniform_init(shape, rng, self.init_scale, self.dtype), name=name)

    def build(self):
        """build model"""
        self.params = {}
        self.get_variables()
        return self

    def get_values(self):
        """name -> numpy value, in parameter order"""
        return collections.OrderedDict((name, self.params[name].numpy()) for name in self.spec.param_shapes())

    def assign(self, values):
        for name, value in values.items():
            self.params[name].assign(np.asarray(value).astype(self.dtype.as_numpy_dtype))

    def encode(self, ids):
        return encoder.encode(ids, self.params, self.spec.encoder_config, self.max_src_len)

    def loss(self, src, tgt_in, tgt_out):
        """(mean, summed, token count) cross-entropy of a padded teacher-forcing batch"""
        return decoder.batch_loss(src, tgt_in, tgt_out, self.params, self.spec.encoder_config, self.max_src_len)

    def translate_ids(self, sentences, max_len=100, batch_size=64):
        """greedy translation of id sequences, returns id lists in input order"""
        outputs = []
        for start in range(0, len(sentences), batch_size):
            memory = self.encode(pad_batch(sentences[start:start + batch_size]))
            outputs.extend(decoder.greedy_decode_batch(memory, self.params, max_len))
        return outputs

    def translate_tokens(self, sentences, max_len=100, batch_size=64):
        """greedy translation of token sequences, returns token lists in input order"""
        ids = [numericalize(sentence, self.spec.src_vocab) for sentence in sentences]
        return [denumericalize(out, self.spec.tgt_vocab) for out in self.translate_ids(ids, max_len, batch_size)]
