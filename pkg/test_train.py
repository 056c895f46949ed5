import os
import numpy as np
import pandas as pd
import pytest
from hseq import train, checkpoint, corpus, evaluation
from hseq.config import Config
from hseq.kernel import SgdSchedule, lr_at_step
from hseq.utils import DivergenceError, DataError, CheckpointError
from conftest import tiny_spec, make_vocab, copy_pairs


def toy_dataset(spec, n_pairs=8, seed=0):
    pairs = copy_pairs(n_pairs, 12, seed=seed)
    return corpus.numericalize_pairs(pairs, spec.src_vocab, spec.tgt_vocab)


def toy_run(spec, tmp_path=None, **kwargs):
    settings = {"batch_size": 4, "max_steps": 3, "seed": 5, "n_iter_log": 1, "export_verbose": 0,
                "metrics_path": os.path.join(str(tmp_path), "metrics.tsv") if tmp_path is not None else None}
    settings.update(kwargs)
    schedule = SgdSchedule(initial_lr=1.0, decay_start_step=3, decay_interval=1, decay_factor=0.5, min_lr=0.1)
    return train.TrainingRun(spec, schedule, **settings)


def read(path):
    with open(path, "rb") as f:
        return f.read()


def test_metrics_log(tmp_path):
    spec = tiny_spec()
    run = toy_run(spec, tmp_path, max_steps=4)
    train.train(run, toy_dataset(spec))
    log = pd.read_csv(run.metrics_path, sep="\t", header=None, names=["step", "lr", "loss"])
    assert log.step.tolist() == [1, 2, 3, 4]
    assert log.lr.tolist() == [lr_at_step(run.schedule, step) for step in range(1, 5)] == [1.0, 1.0, 0.5, 0.25]
    assert np.all(np.isfinite(log.loss)) and np.all(log.loss > 0)


def test_training_is_deterministic(tmp_path):
    spec = tiny_spec()
    paths = [os.path.join(str(tmp_path), "run{}.ckpt".format(i)) for i in range(2)]
    for path in paths:
        train.train(toy_run(spec), toy_dataset(spec), checkpoint_path=path)
    assert read(paths[0]) == read(paths[1])
    train.train(toy_run(spec, seed=6), toy_dataset(spec), checkpoint_path=paths[1])
    assert read(paths[0]) != read(paths[1])


def test_training_reduces_the_loss(tmp_path):
    spec = tiny_spec(hidden_dim=8, embed_dim=8)
    run = toy_run(spec, tmp_path, max_steps=40, batch_size=8)
    run.schedule = SgdSchedule(initial_lr=1.0, decay_start_step=1000, decay_interval=100)
    train.train(run, toy_dataset(spec))
    loss = pd.read_csv(run.metrics_path, sep="\t", header=None).iloc[:, 2].values
    assert loss[-5:].mean() < loss[:5].mean()


def test_fine_tune_without_steps_keeps_the_base(tmp_path):
    spec = tiny_spec()
    base = os.path.join(str(tmp_path), "base.ckpt")
    tuned = os.path.join(str(tmp_path), "tuned.ckpt")
    train.train(toy_run(spec), toy_dataset(spec), checkpoint_path=base)
    train.fine_tune(base, toy_run(spec, max_steps=0, seed=99), toy_dataset(spec, seed=1), checkpoint_path=tuned)
    assert read(base) == read(tuned)


def test_fine_tune_continues_from_the_base(tmp_path):
    spec = tiny_spec()
    dataset = toy_dataset(spec)
    base = os.path.join(str(tmp_path), "base.ckpt")
    network = train.train(toy_run(spec, max_steps=6, batch_size=8), dataset, checkpoint_path=base)
    base_loss = train.eval_model(network, dataset)
    run = toy_run(spec, tmp_path, max_steps=1, batch_size=8)
    train.fine_tune(base, run, dataset)
    first_loss = pd.read_csv(run.metrics_path, sep="\t", header=None).iloc[0, 2]
    assert first_loss == pytest.approx(base_loss[0] / base_loss[1], rel=1e-4)


def test_fine_tune_needs_the_same_vocabularies(tmp_path):
    spec = tiny_spec()
    base = os.path.join(str(tmp_path), "base.ckpt")
    train.train(toy_run(spec, max_steps=1), toy_dataset(spec), checkpoint_path=base)
    other = tiny_spec(src_vocab=make_vocab(12, "u"))
    with pytest.raises(CheckpointError):
        train.fine_tune(base, toy_run(other, max_steps=1), toy_dataset(spec))
    wider = tiny_spec(hidden_dim=6)
    with pytest.raises(CheckpointError):
        train.fine_tune(base, toy_run(wider, max_steps=1), toy_dataset(spec))


def test_divergence_names_the_step(tmp_path):
    spec = tiny_spec()
    base = os.path.join(str(tmp_path), "base.ckpt")
    network = train.train(toy_run(spec, max_steps=0), toy_dataset(spec))
    values = network.get_values()
    values["decoder/out/b"] = np.full_like(values["decoder/out/b"], np.nan)
    checkpoint.save_checkpoint(base, values)
    with pytest.raises(DivergenceError) as e:
        train.train(toy_run(spec, init_checkpoint=base), toy_dataset(spec))
    assert e.value.step == 1


def test_divergence_inside_the_attention_names_the_step(tmp_path):
    spec = tiny_spec()
    base = os.path.join(str(tmp_path), "base.ckpt")
    values = train.train(toy_run(spec, max_steps=0), toy_dataset(spec)).get_values()
    values["encoder/embedding"] = np.full_like(values["encoder/embedding"], np.inf)
    checkpoint.save_checkpoint(base, values)
    with pytest.raises(DivergenceError) as e:
        train.train(toy_run(spec, init_checkpoint=base), toy_dataset(spec))
    assert e.value.step == 1


def test_empty_dataset():
    with pytest.raises(DataError):
        train.train(toy_run(tiny_spec()), [])


def test_screenshot_keeps_the_lowest_loss(network):
    screenshot = train.Screenshot()
    assert screenshot.screenshot(network, 1, 2.0)
    assert not screenshot.screenshot(network, 2, 3.0)
    assert screenshot.step == 1 and screenshot.loss_min == 2.0
    assert set(screenshot) == set(network.spec.param_shapes())


def test_keep_best_parameters():
    spec = tiny_spec()
    train_set, valid_set = toy_dataset(spec, seed=0), toy_dataset(spec, n_pairs=4, seed=1)
    last = train.train(toy_run(spec, max_steps=6, n_iter_eval=1), train_set, valid_set)
    best = train.train(toy_run(spec, max_steps=6, n_iter_eval=1, keep_best=True), train_set, valid_set)

    def valid_loss(network):
        total, n_tokens = train.eval_model(network, valid_set)
        return total / n_tokens

    assert valid_loss(best) <= valid_loss(last) + 1e-9


def test_run_from_config():
    cfg = Config(None, max_steps=12, batch_size=3, lr_val=0.5, min_lr=0.01, seed=4)
    run = train.TrainingRun.from_config(cfg, tiny_spec(), metrics_path="m.tsv")
    assert (run.max_steps, run.batch_size, run.seed, run.metrics_path) == (12, 3, 4, "m.tsv")
    assert run.schedule.initial_lr == 0.5 and run.schedule.decay_start_step == 15000
    with pytest.raises(AssertionError):
        train.TrainingRun(tiny_spec(), SgdSchedule(), batch_size=0)


@pytest.mark.slow
def test_overfit_copy_task():
    vocab_size = 30
    spec = tiny_spec(n_words=vocab_size - 4, hidden_dim=64, embed_dim=64, encoder_layers=2, decoder_layers=2)
    pairs = copy_pairs(200, vocab_size - 4, min_len=3, max_len=6, seed=0)
    dataset = corpus.numericalize_pairs(pairs, spec.src_vocab, spec.tgt_vocab)
    schedule = SgdSchedule(initial_lr=1.0, decay_start_step=1500, decay_interval=250, decay_factor=0.5, min_lr=0.01)
    run = train.TrainingRun(spec, schedule, batch_size=64, max_steps=2000, seed=1000, export_verbose=0)
    network = train.train(run, dataset)
    hypotheses = network.translate_tokens([list(pair.source) for pair in pairs], max_len=10)
    assert evaluation.corpus_bleu(hypotheses, [[list(pair.target)] for pair in pairs]).score >= 99
