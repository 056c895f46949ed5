"""
This module defines the numeric kernel shared by both networks: the LSTM cell,
the stabilized softmax, the masked cross-entropy, reverse-mode gradients,
finite-difference gradient checking, global-norm clipping, and the staircase
SGD learning-rate schedule
"""

import collections
import numpy as np
import tensorflow as tf
from hseq.utils import ShapeError, NumericError


LstmCellState = collections.namedtuple("LstmCellState", ["h", "c"])

MASK_VALUE = -1e9


def get_dtype(name):
    """tensorflow dtype of a precision name"""
    if name == "float32":
        return tf.float32
    if name == "float64":
        return tf.float64
    raise Exception("Illegal dtype. Choose from [float32, float64]")


def uniform_init(shape, rng, scale, dtype):
    """draw a parameter value uniformly in [-scale, scale] from a seeded numpy RandomState"""
    return tf.constant(rng.uniform(-scale, scale, size=shape), dtype=dtype)


def zero_state(batch_size, hidden_dim, dtype):
    zeros = tf.zeros([batch_size, hidden_dim], dtype=dtype)
    return LstmCellState(zeros, zeros)


def check_finite(tensor, message):
    """raise NumericError when a tensor holds NaN or Inf"""
    if not bool(tf.reduce_all(tf.math.is_finite(tensor))):
        raise NumericError(message)
    return tensor


def lstm_cell(x, state, params):
    """
    One LSTM step

    Args:
        x: input [batch, in_dim]
        state (LstmCellState): h and c, each [batch, hidden]
        params (dict): W_ih [in_dim, 4*hidden], W_hh [hidden, 4*hidden], b [4*hidden];
                       gate blocks are ordered input, forget, candidate, output

    Returns:
        LstmCellState with c' = f*c + i*g and h' = o*tanh(c')
    """
    w_ih, w_hh, b = params["W_ih"], params["W_hh"], params["b"]
    if x.shape[-1] != w_ih.shape[0]:
        raise ShapeError("LSTM input", x.shape, w_ih.shape)
    if state.h.shape[-1] != w_hh.shape[0] or state.c.shape[-1] != w_hh.shape[0]:
        raise ShapeError("LSTM state", state.h.shape, w_hh.shape)
    if w_ih.shape[1] != 4 * w_hh.shape[0]:
        raise ShapeError("LSTM gates", w_ih.shape, w_hh.shape)
    z = tf.matmul(x, w_ih) + tf.matmul(state.h, w_hh) + b
    i, f, g, o = tf.split(z, 4, axis=-1)
    c = tf.sigmoid(f) * state.c + tf.sigmoid(i) * tf.tanh(g)
    h = tf.sigmoid(o) * tf.tanh(c)
    return LstmCellState(h, c)


def softmax(v, mask=None):
    """
    softmax over the last axis; masked-out positions get probability 0

    tf.nn.softmax subtracts the maximum before exponentiating.
    """
    v = tf.convert_to_tensor(v)
    if v.shape[-1] == 0:
        raise ValueError("softmax of an empty vector")
    check_finite(v, "softmax input holds NaN or Inf")
    if mask is not None:
        v = tf.where(tf.cast(mask, tf.bool), v, tf.constant(MASK_VALUE, dtype=v.dtype))
    return tf.nn.softmax(v, axis=-1)


def cross_entropy(logits, targets):
    """
    Cross-entropy of logits against gold ids, PAD (id 0) positions excluded

    Args:
        logits: [batch, time, vocab]
        targets: [batch, time] int ids

    Returns:
        (mean loss per non-PAD token, summed loss, number of non-PAD tokens)
    """
    targets = tf.convert_to_tensor(targets)
    mask = tf.cast(tf.not_equal(targets, 0), logits.dtype)
    losses = tf.nn.sparse_softmax_cross_entropy_with_logits(labels=tf.cast(targets, tf.int32), logits=logits)
    total = tf.reduce_sum(losses * mask)
    n_tokens = tf.reduce_sum(mask)
    if float(n_tokens) == 0:
        raise ValueError("cross-entropy over a target without tokens")
    return total / n_tokens, total, n_tokens


def backward(loss_fn, params):
    """
    Reverse-mode gradients of a scalar loss

    Args:
        loss_fn (callable): builds the loss from the parameters, called under a gradient tape
        params (dict): name -> tf.Variable

    Returns:
        (loss, dict name -> gradient); unused parameters get zero gradients
    """
    names = sorted(params)
    with tf.GradientTape() as tape:
        loss = loss_fn()
    if loss.shape.rank != 0:
        raise ValueError("backward needs a scalar loss, got shape {}".format(loss.shape.as_list()))
    grads = tape.gradient(loss, [params[name] for name in names],
                          unconnected_gradients=tf.UnconnectedGradients.ZERO)
    return loss, dict(zip(names, grads))


def gradient_check(loss_fn, params, eps=1e-5, n_samples=8, seed=0):
    """
    Compare analytic gradients with central differences

    Args:
        loss_fn (callable): builds a scalar loss from the parameters
        params (dict): name -> tf.Variable, float64
        eps (float): finite-difference step
        n_samples (int): coordinates sampled per parameter
        seed (int): seed of the coordinate sampling

    Returns:
        max over sampled coordinates of |a - n| / max(|a|, |n|, 1e-8)
    """
    for name, var in params.items():
        assert var.dtype == tf.float64, "gradient_check needs float64 parameters, {} is {}".format(
            name, var.dtype.name)
    if not params:
        return 0.0

    def scalar_loss():
        value = float(loss_fn())
        if not np.isfinite(value):
            raise NumericError("gradient_check met a non-finite loss")
        return value

    loss, grads = backward(loss_fn, params)
    check_finite(loss, "gradient_check met a non-finite loss")
    rng = np.random.RandomState(seed)
    max_error = 0.0
    for name in sorted(params):
        var = params[name]
        analytic = grads[name].numpy().reshape(-1)
        size = analytic.size
        coords = rng.choice(size, size=min(n_samples, size), replace=False)
        base = var.numpy()
        for coord in coords:
            flat = base.reshape(-1).copy()
            flat[coord] += eps
            var.assign(flat.reshape(base.shape))
            loss_plus = scalar_loss()
            flat[coord] -= 2 * eps
            var.assign(flat.reshape(base.shape))
            loss_minus = scalar_loss()
            var.assign(base)
            numeric = (loss_plus - loss_minus) / (2 * eps)
            error = abs(analytic[coord] - numeric) / max(abs(analytic[coord]), abs(numeric), 1e-8)
            max_error = max(max_error, error)
    return max_error


def clip_global_norm(grads, max_norm):
    """
    Scale all gradients by max_norm / g when their global L2 norm g exceeds max_norm

    Args:
        grads (dict): name -> gradient
        max_norm (float)

    Returns:
        (clipped dict, global norm before clipping)
    """
    names = sorted(grads)
    clipped, norm = tf.clip_by_global_norm([grads[name] for name in names], max_norm)
    return dict(zip(names, clipped)), float(norm)


class SgdSchedule(tf.keras.optimizers.schedules.LearningRateSchedule):
    """
    Staircase decay of the SGD learning rate

    initial_lr until decay_start_step, then initial_lr * decay_factor ** (1 + (step - decay_start_step)
    // decay_interval), never below min_lr. Steps count from 1. Also carries the gradient clipping norm.
    """

    def __init__(self, initial_lr=1.0, decay_start_step=15000, decay_interval=1500, decay_factor=0.1,
                 min_lr=0.0001, clip_norm=5.0):
        super().__init__()
        assert initial_lr >= min_lr > 0, "learning rates must satisfy initial_lr >= min_lr > 0"
        assert 0 < decay_factor < 1, "decay_factor has to be in (0, 1)"
        assert decay_interval >= 1, "decay_interval has to be positive"
        self.initial_lr = initial_lr
        self.decay_start_step = decay_start_step
        self.decay_interval = decay_interval
        self.decay_factor = decay_factor
        self.min_lr = min_lr
        self.clip_norm = clip_norm

    @classmethod
    def from_config(cls, config):
        return cls(**config)

    @classmethod
    def from_run_config(cls, cfg):
        """schedule described by a hseq.config.Config"""
        return cls(initial_lr=cfg.lr_val, decay_start_step=cfg.decay_start_step,
                   decay_interval=cfg.decay_interval, decay_factor=cfg.decay_factor, min_lr=cfg.min_lr,
                   clip_norm=cfg.clip_norm)

    def get_config(self):
        return {"initial_lr": self.initial_lr, "decay_start_step": self.decay_start_step,
                "decay_interval": self.decay_interval, "decay_factor": self.decay_factor,
                "min_lr": self.min_lr, "clip_norm": self.clip_norm}

    def __call__(self, step):
        # keras counts applied updates from 0
        step = tf.cast(step, tf.float64) + 1.0
        n_decays = 1.0 + tf.floor((step - self.decay_start_step) / self.decay_interval)
        decayed = tf.maximum(self.initial_lr * tf.pow(tf.constant(self.decay_factor, tf.float64), n_decays),
                             self.min_lr)
        lr = tf.where(step < self.decay_start_step, tf.constant(self.initial_lr, tf.float64), decayed)
        # the optimizer keeps its current rate in a float32 variable
        return tf.cast(lr, tf.float32)


def lr_at_step(schedule, step):
    """learning rate of a 1-based step"""
    assert step >= 1, "steps count from 1"
    if step < schedule.decay_start_step:
        return schedule.initial_lr
    n_decays = 1 + (step - schedule.decay_start_step) // schedule.decay_interval
    return max(schedule.initial_lr * schedule.decay_factor ** n_decays, schedule.min_lr)
