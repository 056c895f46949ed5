"""
This module defines the attention decoder: a stacked unidirectional LSTM whose
top state scores the two-part encoder memory with additive attention
(annotation term plus embedding term), the output distribution computed from
the top state and the context vector, greedy decoding and the teacher-forced
loss
"""

import collections
import numpy as np
import tensorflow as tf
from hseq import kernel, encoder
from hseq.corpus import PAD_ID, SOS_ID, EOS_ID, pad_batch
from hseq.utils import ShapeError


DecoderState = collections.namedtuple("DecoderState", ["layers", "prev_token", "step"])
DecoderState.__doc__ = """per-layer LstmCellStates, previous token ids [batch] and the 1-based step k"""

AttentionWeights = collections.namedtuple("AttentionWeights", ["weights", "scores"])


class DecoderConfig(object):
    """
    num_layers (int): decoder depth (default: 4)
    hidden_dim (int): LSTM units (default: 128)
    embed_dim (int): target embedding size (default: 128)
    attn_dim (int): size of the additive attention layer (default: hidden_dim)
    """

    def __init__(self, num_layers=4, hidden_dim=128, embed_dim=128, attn_dim=None):
        self.num_layers = num_layers
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.attn_dim = attn_dim if attn_dim is not None else hidden_dim
        assert self.num_layers >= 1, "the decoder needs at least one layer"

    def to_dict(self):
        return dict(vars(self))


def param_shapes(config, vocab_size, encoder_config):
    """name -> shape of every decoder parameter"""
    h, e, a = config.hidden_dim, config.embed_dim, config.attn_dim
    shapes = collections.OrderedDict()
    shapes["decoder/embedding"] = [vocab_size, e]
    for layer in range(config.num_layers):
        prefix = "decoder/layer{}".format(layer)
        shapes[prefix + "/W_ih"] = [e if layer == 0 else h, 4 * h]
        shapes[prefix + "/W_hh"] = [h, 4 * h]
        shapes[prefix + "/b"] = [4 * h]
    shapes["decoder/attn/p_a"] = [a]
    shapes["decoder/attn/V_a"] = [h, a]
    shapes["decoder/attn/W_a"] = [encoder_config.hidden_dim, a]
    shapes["decoder/attn/U_a"] = [encoder_config.embed_dim, a]
    shapes["decoder/out/W"] = [h + encoder_config.hidden_dim, vocab_size]
    shapes["decoder/out/b"] = [vocab_size]
    return shapes


def initial_state(batch_size, config, dtype):
    """zero LSTM states, <sos> as previous token, step 1"""
    layers = [kernel.zero_state(batch_size, config.hidden_dim, dtype) for _ in range(config.num_layers)]
    return DecoderState(layers, tf.fill([batch_size], SOS_ID), 1)


def attention_keys(memory, params):
    """W_a h_j + U_a e_j for every source position, [batch, q, attn]"""
    w_a, u_a = params["decoder/attn/W_a"], params["decoder/attn/U_a"]
    if memory.annotations.shape[-1] != w_a.shape[0]:
        raise ShapeError("attention annotations", memory.annotations.shape, w_a.shape)
    if memory.embeddings.shape[-1] != u_a.shape[0]:
        raise ShapeError("attention embeddings", memory.embeddings.shape, u_a.shape)
    return tf.tensordot(memory.annotations, w_a, axes=1) + tf.tensordot(memory.embeddings, u_a, axes=1)


def attention_scores(s_prev, memory, params, keys=None):
    """
    Additive attention over the memory

    d_j = p_a . tanh(V_a s_prev + W_a h_j + U_a e_j), weights = softmax(d) over real source positions

    Args:
        s_prev: decoder top state [batch, hidden]
        memory (EncoderMemory)
        params (dict): decoder parameters
        keys: precomputed attention_keys(memory, params)

    Returns:
        AttentionWeights
    """
    v_a, p_a = params["decoder/attn/V_a"], params["decoder/attn/p_a"]
    if s_prev.shape[-1] != v_a.shape[0]:
        raise ShapeError("attention query", s_prev.shape, v_a.shape)
    keys = attention_keys(memory, params) if keys is None else keys
    query = tf.matmul(s_prev, v_a)
    scores = tf.tensordot(tf.tanh(keys + query[:, None, :]), p_a, axes=1)
    return AttentionWeights(kernel.softmax(scores, memory.mask), scores)


def context_vector(weights, memory):
    """a_k = sum_j weights_j h_j, [batch, hidden]"""
    return tf.einsum("bq,bqh->bh", weights.weights, memory.annotations)


def _step(state, memory, params, keys=None):
    """logits [batch, vocab] and the new layer states of one decoding step"""
    embedding = params["decoder/embedding"]
    prev = np.asarray(state.prev_token)
    if prev.min() < 0 or prev.max() >= embedding.shape[0]:
        raise ValueError("token id {} out of range for a vocabulary of {}".format(prev.max(), embedding.shape[0]))
    x = tf.gather(embedding, prev)
    layers = []
    for layer, layer_state in enumerate(state.layers):
        layer_state = kernel.lstm_cell(x, layer_state, encoder.cell_params(params, "decoder/layer{}".format(layer)))
        layers.append(layer_state)
        x = layer_state.h
    attention = attention_scores(x, memory, params, keys)
    context = context_vector(attention, memory)
    logits = tf.matmul(tf.concat([x, context], axis=-1), params["decoder/out/W"]) + params["decoder/out/b"]
    return logits, layers


def decode_step(state, memory, params, keys=None):
    """
    One decoding step p(y_k) = f(y_{k-1}, s_k, a_k)

    Returns:
        (distribution [batch, vocab], next DecoderState whose previous token is the argmax)
    """
    logits, layers = _step(state, memory, params, keys)
    distribution = kernel.softmax(logits)
    next_token = np.argmax(logits.numpy(), axis=-1).astype(np.int32)
    return distribution, DecoderState(layers, next_token, state.step + 1)


def greedy_decode_batch(memory, params, max_len=100):
    """
    Greedy decoding of every sentence of the memory

    Starts from <sos>, emits the argmax token (ties to the lowest id, <pad> and <sos> never emitted),
    stops at <eos> (not emitted) or after max_len tokens.

    Returns:
        list of id lists
    """
    assert max_len >= 1, "max_len has to be positive"
    batch_size = memory.mask.shape[0]
    dtype = memory.annotations.dtype
    config = DecoderConfig(num_layers=_num_layers(params), hidden_dim=params["decoder/attn/V_a"].shape[0])
    state = initial_state(batch_size, config, dtype)
    keys = attention_keys(memory, params)
    banned = np.zeros([params["decoder/out/b"].shape[0]])
    banned[[PAD_ID, SOS_ID]] = kernel.MASK_VALUE
    outputs = [[] for _ in range(batch_size)]
    finished = np.zeros(batch_size, dtype=bool)
    for _ in range(max_len):
        logits, layers = _step(state, memory, params, keys)
        tokens = np.argmax(logits.numpy() + banned, axis=-1).astype(np.int32)
        for b in np.where(~finished)[0]:
            if tokens[b] == EOS_ID:
                finished[b] = True
            else:
                outputs[b].append(int(tokens[b]))
        if finished.all():
            break
        state = DecoderState(layers, tokens, state.step + 1)
    return outputs


def greedy_decode(memory, params, max_len=100):
    """greedy decoding of a single-sentence memory, returns an id list"""
    assert memory.mask.shape[0] == 1, "greedy_decode takes one sentence, use greedy_decode_batch"
    return greedy_decode_batch(memory, params, max_len)[0]


def _num_layers(params):
    return len([name for name in params if name.startswith("decoder/layer") and name.endswith("/W_ih")])


def forward_logits(src, tgt_in, params, encoder_config, max_len=None):
    """
    Teacher-forced logits

    Args:
        src: source ids [batch, S]
        tgt_in: gold previous tokens [batch, T], starting with <sos>

    Returns:
        logits [batch, T, vocab]
    """
    memory = encoder.encode(src, params, encoder_config, max_len)
    tgt_in = np.asarray(tgt_in, dtype=np.int32)
    config = DecoderConfig(num_layers=_num_layers(params), hidden_dim=params["decoder/attn/V_a"].shape[0])
    state = initial_state(tgt_in.shape[0], config, memory.annotations.dtype)
    keys = attention_keys(memory, params)
    logits = []
    for t in range(tgt_in.shape[1]):
        state = DecoderState(state.layers, tgt_in[:, t], state.step)
        step_logits, layers = _step(state, memory, params, keys)
        logits.append(step_logits)
        state = DecoderState(layers, None, state.step + 1)
    return tf.stack(logits, axis=1)


def batch_loss(src, tgt_in, tgt_out, params, encoder_config, max_len=None):
    """(mean cross-entropy per non-PAD token, summed cross-entropy, token count) of a padded batch"""
    logits = forward_logits(src, tgt_in, params, encoder_config, max_len)
    return kernel.cross_entropy(logits, tgt_out)


def teacher_forced_loss(src_ids, tgt_ids, params, encoder_config, max_len=None):
    """
    Mean cross-entropy of one pair with gold previous tokens fed back

    Args:
        src_ids (list): source ids
        tgt_ids (list): target ids without <sos>/<eos>; the <eos> prediction is part of the loss
    """
    if len(tgt_ids) == 0:
        raise ValueError("teacher-forced loss of an empty target")
    tgt_in = pad_batch([[SOS_ID] + list(tgt_ids)])
    tgt_out = pad_batch([list(tgt_ids) + [EOS_ID]])
    return batch_loss([list(src_ids)], tgt_in, tgt_out, params, encoder_config, max_len)[0]
