"""
This module defines the training of one network: teacher-forced SGD with
global-norm clipping and the staircase schedule over seeded shuffled batches,
fine-tuning from a pretrained checkpoint, dev-set monitoring and the metrics
log
"""

import numpy as np
import tensorflow as tf
from hseq import kernel, model, checkpoint, corpus
from hseq.utils import TimeLogger, DivergenceError, NumericError, DataError, CheckpointError, set_seed, optimize


class TrainingRun(object):
    """
    spec (NetworkSpec): the network to train
    schedule (SgdSchedule): learning rate and clipping norm
    batch_size (int): sentences per batch (default: 256)
    max_steps (int): number of SGD updates
    seed (int): initialization and shuffling seed
    init_checkpoint (str): start from this checkpoint instead of random parameters (fine-tuning)
    metrics_path (str): tab-separated log, one "step lr loss" line per step
    """

    def __init__(self, spec, schedule, batch_size=256, max_steps=20000, seed=1000, init_checkpoint=None,
                 metrics_path=None, dtype="float32", init_scale=0.08, max_src_len=None, n_iter_log=100,
                 n_iter_eval=500, keep_best=False, export_verbose=1):
        assert batch_size >= 1, "batch_size has to be positive"
        assert max_steps >= 0, "max_steps cannot be negative"
        self.spec = spec
        self.schedule = schedule
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.seed = seed
        self.init_checkpoint = init_checkpoint
        self.metrics_path = metrics_path
        self.dtype = dtype
        self.init_scale = init_scale
        self.max_src_len = max_src_len
        self.n_iter_log = n_iter_log
        self.n_iter_eval = n_iter_eval
        self.keep_best = keep_best
        self.export_verbose = export_verbose

    @classmethod
    def from_config(cls, cfg, spec, **kwargs):
        """run described by a hseq.config.Config, keyword arguments win"""
        settings = {"batch_size": cfg.batch_size, "max_steps": cfg.max_steps, "seed": cfg.seed,
                    "dtype": cfg.dtype, "init_scale": cfg.init_scale, "max_src_len": cfg.max_src_len,
                    "n_iter_log": cfg.n_iter_log, "n_iter_eval": cfg.n_iter_eval, "keep_best": cfg.keep_best,
                    "export_verbose": cfg.export_verbose}
        settings.update(kwargs)
        return cls(spec, kernel.SgdSchedule.from_run_config(cfg), **settings)


def append_record(filename, contents):
    """define function for appending training record"""
    if filename is None:
        return
    with open(filename, 'a', encoding="utf-8") as f:
        f.write("\t".join(str(content) for content in contents) + "\n")


def eval_model(network, examples, batch_size=256):
    """summed teacher-forced cross-entropy and number of target tokens (<eos> included) over examples"""
    total, n_tokens = 0.0, 0.0
    for src, tgt_in, tgt_out in corpus.make_batches(examples, batch_size, seed=0, shuffle=False, repeat=False):
        _, batch_total, batch_tokens = network.loss(src.numpy(), tgt_in.numpy(), tgt_out.numpy())
        total += float(batch_total)
        n_tokens += float(batch_tokens)
    return total, n_tokens


class Screenshot(dict):
    """keep the parameters with the lowest dev loss"""
    def __init__(self):
        super().__init__()
        self.loss_min = np.inf
        self.step = None

    def screenshot(self, network, step, loss):
        """record the parameters if loss improves on the best one"""
        if loss < self.loss_min:
            self.loss_min = loss
            self.step = step
            self.update(network.get_values())
            return True
        return False


def train(run, dataset, valid_set=None, checkpoint_path=None):
    """
    Train a network

    Args:
        run (TrainingRun)
        dataset (list): (src ids, tgt ids) examples
        valid_set (list): optional dev examples evaluated every n_iter_eval steps
        checkpoint_path (str): where to save the final network

    Returns:
        the trained Seq2Seq

    Raises:
        DivergenceError: the loss becomes NaN or Inf
    """
    if not dataset:
        raise DataError("Cannot train on an empty dataset")
    logger = TimeLogger(time_logger_step=1, hierachy=2, verbose=run.export_verbose)
    step_logger = TimeLogger(time_logger_step=max(run.n_iter_log, 1), hierachy=3,
                             verbose=1 if run.export_verbose > 1 else 0)
    set_seed(run.seed)
    network = model.factory(run.spec, seed=run.seed, dtype=run.dtype, init_scale=run.init_scale,
                            max_src_len=run.max_src_len)
    if run.init_checkpoint is not None:
        checkpoint.restore(network, run.init_checkpoint)
        logger.log("Load existing model at {}...".format(run.init_checkpoint))
    else:
        logger.log("Create new {} model ({} parameters)...".format(
            run.spec.role, sum(int(np.prod(v.shape)) for v in network.params.values())))

    optimizer = tf.keras.optimizers.SGD(learning_rate=run.schedule)
    batches = iter(corpus.make_batches(dataset, run.batch_size, run.seed))
    if run.metrics_path is not None:
        open(run.metrics_path, "w").close()
    best_params = Screenshot()

    for step in range(1, run.max_steps + 1):
        src, tgt_in, tgt_out = [tensor.numpy() for tensor in next(batches)]
        try:
            loss, grads = kernel.backward(lambda: network.loss(src, tgt_in, tgt_out)[0], network.params)
        except NumericError:
            raise DivergenceError(step, float("nan"))
        loss_value = float(loss)
        if not np.isfinite(loss_value):
            raise DivergenceError(step, loss_value)
        grads, norm = kernel.clip_global_norm(grads, run.schedule.clip_norm)
        lr = kernel.lr_at_step(run.schedule, step)
        optimize(optimizer, grads, network.params)
        append_record(run.metrics_path, [step, lr, loss_value])
        step_logger.log("Step: {}/{}\tlr: {}\tloss (train): {:1.6f}\tgrad norm: {:1.4f}".format(
            step, run.max_steps, lr, loss_value, norm))

        if valid_set and run.n_iter_eval > 0 and step % run.n_iter_eval == 0:
            total, n_tokens = eval_model(network, valid_set, run.batch_size)
            valid_loss = total / n_tokens
            improved = best_params.screenshot(network, step, valid_loss)
            logger.log("Step: {}\tloss (valid): {:1.6f}\tbest: {:1.6f}{}".format(
                step, valid_loss, best_params.loss_min, " *" if improved else ""))

    if run.keep_best and best_params.step is not None:
        network.assign(best_params)
        logger.log("Restore parameters of step {} (valid loss {:1.6f})".format(best_params.step,
                                                                             best_params.loss_min))
    logger.log("------------------ {} training finished! -------------------".format(run.spec.role))
    if checkpoint_path is not None:
        checkpoint.save_model(network, checkpoint_path)
        logger.log("Model saved in path: {}".format(checkpoint_path))
    return network


def fine_tune(base_checkpoint, run, dataset, valid_set=None, checkpoint_path=None):
    """
    Train starting from a pretrained checkpoint

    Raises:
        CheckpointError: the checkpoint names, shapes or vocabularies differ from the run's network
    """
    try:
        base_spec, _ = checkpoint.load_spec(base_checkpoint)
    except CheckpointError:
        base_spec = None
    if base_spec is not None and (base_spec.src_vocab != run.spec.src_vocab
                                  or base_spec.tgt_vocab != run.spec.tgt_vocab):
        raise CheckpointError("Checkpoint {} was trained with different vocabularies".format(base_checkpoint))
    run.init_checkpoint = base_checkpoint
    return train(run, dataset, valid_set=valid_set, checkpoint_path=checkpoint_path)
