"""
This module defines utility functions shared by training and the command line,
including the optimizer, the timer, seeding, the md5 key for each configuration,
and the exception hierarchy
"""

import time
import json
import random
import hashlib
import numpy as np
import tensorflow as tf


class HseqError(Exception):
    """base class of all errors raised by hseq"""


class UsageError(HseqError):
    """bad command line, missing or unreadable input path"""


class DataError(HseqError):
    """malformed or inconsistent input data"""


class AlignmentError(DataError):
    """source and target files do not have the same number of lines"""
    def __init__(self, src_path, n_src, tgt_path, n_tgt):
        super().__init__("Corpus files are not aligned: {} has {} lines but {} has {} lines".format(
            src_path, n_src, tgt_path, n_tgt))
        self.n_src, self.n_tgt = n_src, n_tgt


class CheckpointError(DataError):
    """unreadable checkpoint or checkpoint incompatible with a network"""


class ShapeError(HseqError, ValueError):
    """tensor dimensions do not agree"""
    def __init__(self, what, shape_a, shape_b):
        super().__init__("{}: shape {} does not match shape {}".format(what, list(shape_a), list(shape_b)))


class NumericError(HseqError):
    """NaN or Inf met at an operation boundary"""


class DivergenceError(NumericError):
    """non-finite training loss"""
    def __init__(self, step, loss_value):
        super().__init__("Training diverged at step {} (loss={})".format(step, loss_value))
        self.step = step


class CascadeError(HseqError):
    """failure inside one stage of the coarse-to-fine cascade"""
    def __init__(self, stage, message):
        super().__init__("[{} stage] {}".format(stage, message))
        self.stage = stage


def set_seed(in_seed):
    """seed python, numpy and tensorflow generators"""
    int_seed = int(in_seed)
    random.seed(int_seed)
    np.random.seed(int_seed)
    tf.random.set_seed(int_seed)


def optimize(optimizer, grads, params):
    """
    Apply one update of the optimizer

    Args:
        optimizer: a tf.keras optimizer (SGD for hseq)
        grads (dict): name -> gradient tensor, already clipped
        params (dict): name -> tf.Variable
    """
    names = sorted(params)
    optimizer.apply_gradients([(grads[name], params[name]) for name in names])


class TimeLogger:
    """calculate training time"""
    def __init__(self, time_logger_step=1, hierachy=1, verbose=1):
        self.time_logger_step = time_logger_step
        self.step_count = 0
        self.hierachy = hierachy
        self.verbose = verbose
        self.time = time.time()

    def log(self, s):
        """time log"""
        if self.verbose > 0 and self.step_count % self.time_logger_step == 0:
            print("#" * 4 * self.hierachy, " ", s, "  --time elapsed: %.2f" % (time.time() - self.time))
            self.time = time.time()
        self.step_count += 1


def md5(obj):
    """
    returns a hashed with md5 string of the key
    """
    content = obj if isinstance(obj, dict) else vars(obj)
    key = json.dumps(content, sort_keys=True, default=str)
    return hashlib.md5(key.encode()).hexdigest()
