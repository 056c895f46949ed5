import numpy as np
import pytest
import tensorflow as tf
from hseq import decoder, kernel, model
from hseq.corpus import PAD_ID, SOS_ID, EOS_ID
from hseq.encoder import EncoderMemory
from hseq.utils import ShapeError
from conftest import tiny_spec


def random_attention(rng, batch, q, hidden=3, embed=2, attn=4):
    memory = EncoderMemory(tf.constant(rng.normal(size=[batch, q, hidden])),
                           tf.constant(rng.normal(size=[batch, q, embed])),
                           tf.constant(np.ones([batch, q], dtype=bool)))
    params = {"decoder/attn/p_a": tf.constant(rng.normal(size=[attn])),
              "decoder/attn/V_a": tf.constant(rng.normal(size=[hidden, attn])),
              "decoder/attn/W_a": tf.constant(rng.normal(size=[hidden, attn])),
              "decoder/attn/U_a": tf.constant(rng.normal(size=[embed, attn]))}
    s_prev = tf.constant(rng.normal(size=[batch, hidden]))
    return s_prev, memory, params


def test_attention_weights_are_normalized():
    rng = np.random.RandomState(0)
    for _ in range(1000):
        s_prev, memory, params = random_attention(rng, 1, rng.randint(1, 8))
        attention = decoder.attention_scores(s_prev, memory, params)
        weights = attention.weights.numpy()
        assert abs(weights.sum() - 1.0) < 1e-6
        assert np.all(weights >= 0)
        shifted = kernel.softmax(attention.scores + 17.0, memory.mask).numpy()
        np.testing.assert_allclose(shifted, weights, atol=1e-6)


def test_single_position_gets_all_the_weight():
    s_prev, memory, params = random_attention(np.random.RandomState(1), 2, 1)
    np.testing.assert_allclose(decoder.attention_scores(s_prev, memory, params).weights.numpy(), [[1.0], [1.0]])


def test_without_embedding_term_attention_is_standard_additive():
    rng = np.random.RandomState(2)
    s_prev, memory, params = random_attention(rng, 1, 5)
    params["decoder/attn/U_a"] = tf.zeros_like(params["decoder/attn/U_a"])
    weights = decoder.attention_scores(s_prev, memory, params).weights.numpy()[0]

    s, h = s_prev.numpy()[0], memory.annotations.numpy()[0]
    v, w, p = (params[name].numpy() for name in ["decoder/attn/V_a", "decoder/attn/W_a", "decoder/attn/p_a"])
    scores = np.array([p @ np.tanh(s @ v + h_j @ w) for h_j in h])
    expected = np.exp(scores - scores.max()) / np.exp(scores - scores.max()).sum()
    np.testing.assert_allclose(weights, expected, atol=1e-12)


def test_masked_positions_get_no_weight():
    s_prev, memory, params = random_attention(np.random.RandomState(3), 1, 4)
    memory = memory._replace(mask=tf.constant([[True, True, False, False]]))
    weights = decoder.attention_scores(s_prev, memory, params).weights.numpy()
    np.testing.assert_array_equal(weights[0, 2:], [0.0, 0.0])
    weights_short = decoder.attention_scores(s_prev, EncoderMemory(memory.annotations[:, :2], memory.embeddings[:, :2],
                                                                   memory.mask[:, :2]), params).weights.numpy()
    np.testing.assert_allclose(weights[0, :2], weights_short[0], atol=1e-12)


def test_context_vector_is_the_weighted_sum():
    s_prev, memory, params = random_attention(np.random.RandomState(4), 1, 3)
    attention = decoder.attention_scores(s_prev, memory, params)
    expected = attention.weights.numpy()[0] @ memory.annotations.numpy()[0]
    np.testing.assert_allclose(decoder.context_vector(attention, memory).numpy()[0], expected, atol=1e-12)


def test_permuted_memory_permutes_the_weights():
    s_prev, memory, params = random_attention(np.random.RandomState(6), 1, 5)
    perm = [3, 0, 4, 1, 2]
    permuted = EncoderMemory(*[tf.gather(part, perm, axis=1) for part in memory])
    attention = decoder.attention_scores(s_prev, memory, params)
    attention_permuted = decoder.attention_scores(s_prev, permuted, params)
    np.testing.assert_allclose(attention_permuted.weights.numpy(), attention.weights.numpy()[:, perm], atol=1e-12)
    np.testing.assert_allclose(decoder.context_vector(attention_permuted, permuted).numpy(),
                               decoder.context_vector(attention, memory).numpy(), atol=1e-12)


def test_attention_shape_errors():
    s_prev, memory, params = random_attention(np.random.RandomState(5), 1, 3)
    with pytest.raises(ShapeError):
        decoder.attention_scores(tf.zeros([1, 5], tf.float64), memory, params)
    params["decoder/attn/U_a"] = tf.zeros([7, 4], tf.float64)
    with pytest.raises(ShapeError):
        decoder.attention_scores(s_prev, memory, params)


def biased(network, token, value=50.0):
    """make the output layer prefer one token whatever the input"""
    network.params["decoder/out/W"].assign(tf.zeros_like(network.params["decoder/out/W"]))
    bias = np.zeros(network.params["decoder/out/b"].shape)
    bias[token] = value
    network.params["decoder/out/b"].assign(bias.astype(network.params["decoder/out/b"].dtype.as_numpy_dtype))
    return network


def test_greedy_decode_stops_at_eos(network):
    biased(network, EOS_ID)
    assert decoder.greedy_decode(network.encode([4, 5]), network.params) == []


def test_greedy_decode_stops_at_max_len(network):
    biased(network, 7)
    assert decoder.greedy_decode(network.encode([4, 5]), network.params, max_len=6) == [7] * 6


def test_greedy_decode_never_emits_pad_or_sos(network):
    biased(network, PAD_ID)
    network.params["decoder/out/b"][SOS_ID].assign(40.0)
    network.params["decoder/out/b"][9].assign(30.0)
    assert decoder.greedy_decode(network.encode([4]), network.params, max_len=3) == [9, 9, 9]


def test_greedy_ties_go_to_the_lowest_id(network):
    biased(network, 6)
    network.params["decoder/out/b"][8].assign(50.0)
    assert decoder.greedy_decode(network.encode([4]), network.params, max_len=2) == [6, 6]


def test_batch_decoding_matches_single_decoding():
    network = model.factory(tiny_spec(), seed=11, dtype="float64")
    sentences = [[4, 5, 6], [7], [8, 9]]
    memory = network.encode(np.array([[4, 5, 6], [7, 0, 0], [8, 9, 0]]))
    batch = decoder.greedy_decode_batch(memory, network.params, max_len=5)
    assert batch == [decoder.greedy_decode(network.encode(s), network.params, max_len=5) for s in sentences]


def test_decode_step(network):
    memory = network.encode([4, 5])
    state = decoder.initial_state(1, network.spec.decoder_config, tf.float32)
    assert int(state.prev_token[0]) == SOS_ID and state.step == 1
    distribution, next_state = decoder.decode_step(state, memory, network.params)
    assert float(tf.reduce_sum(distribution)) == pytest.approx(1.0, abs=1e-5)
    assert int(next_state.prev_token[0]) == int(np.argmax(distribution.numpy()[0]))
    assert next_state.step == 2
    with pytest.raises(ValueError):
        decoder.decode_step(next_state._replace(prev_token=np.array([99])), memory, network.params)


def test_teacher_forced_loss(network):
    loss = float(decoder.teacher_forced_loss([4, 5], [6, 7], network.params, network.spec.encoder_config))
    # near-uniform outputs at initialization
    assert loss == pytest.approx(np.log(len(network.spec.tgt_vocab)), rel=0.1)
    with pytest.raises(ValueError):
        decoder.teacher_forced_loss([4, 5], [], network.params, network.spec.encoder_config)


def test_gradient_of_the_full_coarse_loss():
    spec = tiny_spec(n_words=5, hidden_dim=3, embed_dim=2, encoder_layers=2, decoder_layers=2)
    network = model.factory(spec, seed=0, dtype="float64", init_scale=0.5)

    def loss_fn():
        return decoder.teacher_forced_loss([4, 5, 6], [7, 4, 8], network.params, spec.encoder_config)

    assert kernel.gradient_check(loss_fn, network.params, n_samples=4) < 1e-4
