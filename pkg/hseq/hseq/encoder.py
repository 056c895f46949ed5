"""
This module defines the encoder of both networks: an optionally bidirectional
first LSTM layer, unidirectional upper layers, residual connections on the
chosen layers, and the two-part attention memory (top-layer annotations plus
the source embeddings)
"""

import collections
import numpy as np
import tensorflow as tf
from hseq import kernel
from hseq.corpus import PAD_ID


class EncoderMemory(collections.namedtuple("EncoderMemory", ["annotations", "embeddings", "mask"])):
    """
    annotations [batch, q, hidden]: top-layer outputs
    embeddings [batch, q, embed]: source embeddings, the second memory track read by attention
    mask [batch, q]: True on real source positions
    """
    __slots__ = ()

    @property
    def length(self):
        return int(tf.reduce_sum(tf.cast(self.mask[0], tf.int32)))


class EncoderConfig(object):
    """
    num_layers (int): encoder depth (default: 4)
    hidden_dim (int): LSTM units (default: 128)
    embed_dim (int): source embedding size (default: 128)
    bidirectional_first (bool): forward and backward LSTMs on layer 0, projected back to hidden_dim
    residual_layers (list): 0-based layers whose block input is added to their output (default: last two)
    """

    def __init__(self, num_layers=4, hidden_dim=128, embed_dim=128, bidirectional_first=True,
                 residual_layers=(2, 3)):
        self.num_layers = num_layers
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.bidirectional_first = bidirectional_first
        self.residual_layers = sorted(set(residual_layers))
        assert self.num_layers >= 1, "the encoder needs at least one layer"
        assert all(0 <= layer < num_layers for layer in self.residual_layers), \
            "residual layers {} out of range for {} layers".format(self.residual_layers, num_layers)
        assert 0 not in self.residual_layers or embed_dim == hidden_dim, \
            "a residual first layer needs embed_dim == hidden_dim"

    def to_dict(self):
        return dict(vars(self))


def param_shapes(config, vocab_size):
    """name -> shape of every encoder parameter"""
    h, e = config.hidden_dim, config.embed_dim
    shapes = collections.OrderedDict()
    shapes["encoder/embedding"] = [vocab_size, e]

    def cell(prefix, in_dim):
        shapes[prefix + "/W_ih"] = [in_dim, 4 * h]
        shapes[prefix + "/W_hh"] = [h, 4 * h]
        shapes[prefix + "/b"] = [4 * h]

    if config.bidirectional_first:
        cell("encoder/layer0/fwd", e)
        cell("encoder/layer0/bwd", e)
        shapes["encoder/layer0/proj/W"] = [2 * h, h]
        shapes["encoder/layer0/proj/b"] = [h]
    else:
        cell("encoder/layer0", e)
    for layer in range(1, config.num_layers):
        cell("encoder/layer{}".format(layer), h)
    return shapes


def cell_params(params, prefix):
    return {"W_ih": params[prefix + "/W_ih"], "W_hh": params[prefix + "/W_hh"], "b": params[prefix + "/b"]}


def run_lstm(inputs, mask, params, reverse=False):
    """
    Run one LSTM over time

    Args:
        inputs: [batch, time, in_dim]
        mask: [batch, time] bool, padded positions keep the previous state and output zeros
        params (dict): W_ih, W_hh, b
        reverse (bool): run from the last position to the first

    Returns:
        outputs [batch, time, hidden]
    """
    n_time = inputs.shape[1]
    state = kernel.zero_state(inputs.shape[0], params["W_hh"].shape[0], inputs.dtype)
    keep = tf.cast(mask, inputs.dtype)[:, :, None]
    outputs = [None] * n_time
    for t in (reversed(range(n_time)) if reverse else range(n_time)):
        new = kernel.lstm_cell(inputs[:, t], state, params)
        m = keep[:, t]
        state = kernel.LstmCellState(m * new.h + (1 - m) * state.h, m * new.c + (1 - m) * state.c)
        outputs[t] = new.h * m
    return tf.stack(outputs, axis=1)


def bidirectional_layer(inputs, mask, params):
    """forward and backward outputs of layer 0, each [batch, time, hidden]"""
    fwd = run_lstm(inputs, mask, cell_params(params, "encoder/layer0/fwd"))
    bwd = run_lstm(inputs, mask, cell_params(params, "encoder/layer0/bwd"), reverse=True)
    return fwd, bwd


def as_batch(ids, vocab_size, max_len=None):
    """validate source ids and return them as an int32 [batch, time] array"""
    batch = np.asarray(ids, dtype=np.int64)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.size == 0 or batch.shape[1] == 0:
        raise ValueError("cannot encode an empty source sequence")
    if np.any(batch[:, 0] == PAD_ID):
        raise ValueError("source sequences cannot start with PAD")
    bad = batch[(batch < 0) | (batch >= vocab_size)]
    if bad.size:
        raise ValueError("source id {} out of range for a vocabulary of {}".format(bad[0], vocab_size))
    if max_len is not None and batch.shape[1] > max_len:
        raise ValueError("source length {} exceeds the maximum {}".format(batch.shape[1], max_len))
    return batch.astype(np.int32)


def encode_layers(ids, params, config, max_len=None):
    """
    Encode source ids and return every layer output

    Returns:
        (list of per-layer outputs [batch, q, hidden], embeddings [batch, q, embed], mask [batch, q])
    """
    embedding = params["encoder/embedding"]
    ids = as_batch(ids, embedding.shape[0], max_len)
    mask = tf.not_equal(ids, PAD_ID)
    keep = tf.cast(mask, embedding.dtype)[:, :, None]
    embeddings = tf.gather(embedding, ids)

    if config.bidirectional_first:
        fwd, bwd = bidirectional_layer(embeddings, mask, params)
        x = tf.tensordot(tf.concat([fwd, bwd], axis=-1), params["encoder/layer0/proj/W"], axes=1) \
            + params["encoder/layer0/proj/b"]
        x = x * keep
    else:
        x = run_lstm(embeddings, mask, cell_params(params, "encoder/layer0"))
    if 0 in config.residual_layers:
        x = x + embeddings * keep
    outputs = [x]
    for layer in range(1, config.num_layers):
        block = run_lstm(x, mask, cell_params(params, "encoder/layer{}".format(layer)))
        x = block + x if layer in config.residual_layers else block
        outputs.append(x)
    return outputs, embeddings, mask


def encode(ids, params, config, max_len=None):
    """
    Encode source ids into the attention memory

    Args:
        ids: one id sequence or a PAD-filled [batch, time] array
        params (dict): encoder parameters by name
        config (EncoderConfig)
        max_len (int): longest accepted source

    Returns:
        EncoderMemory with top-layer annotations and raw embeddings
    """
    outputs, embeddings, mask = encode_layers(ids, params, config, max_len)
    return EncoderMemory(outputs[-1], embeddings, mask)
