import os
import numpy as np
import pytest
from hseq import cascade, corpus, evaluation, model, segmenter, train
from hseq.config import Config
from hseq.corpus import SentencePair, UNK_ID, EOS_ID
from hseq.kernel import SgdSchedule
from hseq.segmenter import SegmentRuleSet
from hseq.utils import CascadeError, CheckpointError
from conftest import tiny_spec, copy_pairs
from test_segmenter import AUDIT_SENTENCE
from test_decoder import biased

AUDIT_TARGET = ("由於 「 不發表意見的基礎 」 一節 所述 事項 的 重要性 ， 我們 未能 取得 充足 適當 的 審計 憑證 ， "
                "為 綜合 財務 報表 是否 按照 香港 公司條例 妥為 擬備 提供 審計 意見 的 基礎 。").split()


def test_short_pair_passes_through():
    pair = SentencePair(0, ("a", "b", ","), ("甲", "乙"))
    assert cascade.align_pair(pair, SegmentRuleSet()) == [(["a", "b", ","], ["甲", "乙"])]


def test_long_pair_gives_one_example_per_segment():
    pair = SentencePair(0, tuple(AUDIT_SENTENCE), tuple(AUDIT_TARGET))
    aligned = cascade.align_pair(pair, SegmentRuleSet())
    assert [len(src) for src, _ in aligned] == [22, 25, 22]
    assert [tgt[-1] for _, tgt in aligned[:2]] == ["，", "，"]
    assert sum((tgt for _, tgt in aligned), []) == AUDIT_TARGET


def test_unmatched_target_is_split_evenly():
    source = ["x{}".format(i) for i in range(90)]
    aligned = cascade.align_pair(SentencePair(0, tuple(source), tuple("甲乙丙丁戊己庚辛壬癸")), SegmentRuleSet())
    assert [len(src) for src, _ in aligned] == [30, 30, 30]
    assert [len(tgt) for _, tgt in aligned] == [4, 3, 3]
    assert cascade.align_pair(SentencePair(0, tuple(source), ("甲", "乙")), SegmentRuleSet()) == []


def test_coarse_training_set_sources_fit_the_threshold():
    rules = SegmentRuleSet(threshold=12, fallback_target_len=8)
    rng = np.random.RandomState(0)
    tokens = ["a", "b", "c", ",", "and", "which"]
    for i in range(500):
        source = list(rng.choice(tokens, size=rng.randint(1, 60)))
        target = list(rng.choice(["甲", "乙", "，", "但"], size=rng.randint(1, 60)))
        aligned = cascade.align_pair(SentencePair(i, tuple(source), tuple(target)), rules)
        assert all(0 < len(src) <= rules.threshold for src, _ in aligned)
        assert all(len(tgt) > 0 for _, tgt in aligned)
        if aligned:
            assert sum((src for src, _ in aligned), []) == source
            assert sum((tgt for _, tgt in aligned), []) == target


def test_coarse_training_set_ids():
    spec = tiny_spec()
    pairs = copy_pairs(5, 12)
    examples = cascade.build_coarse_training_set(pairs, SegmentRuleSet(), spec.src_vocab, spec.tgt_vocab)
    assert len(examples) == 5
    assert examples[0] == (corpus.numericalize(pairs[0].source, spec.src_vocab),
                           corpus.numericalize(pairs[0].target, spec.tgt_vocab))
    assert cascade.build_coarse_training_set([], SegmentRuleSet(), spec.src_vocab, spec.tgt_vocab) == []


def test_coarse_translation_concatenates_segment_outputs():
    network = model.factory(tiny_spec(), seed=2, dtype="float64")
    rules = SegmentRuleSet(threshold=4, fallback_target_len=3)
    source = ["s{}".format(i) for i in [1, 5, 7, 2, 2, 9, 0, 11, 4, 3]]
    segments = segmenter.segment(source, rules).segments
    assert [len(seg) for seg in segments] == [3, 3, 2, 2]
    expected = sum((network.translate_tokens([seg], max_len=5)[0] for seg in segments), [])
    assert cascade.translate_coarse(source, rules, network, max_len=5) == expected
    assert cascade.translate_corpus([source, source[:2]], rules, network, max_len=5) == \
        [expected, network.translate_tokens([source[:2]], max_len=5)[0]]


def test_empty_input_fails_in_the_coarse_stage(network):
    with pytest.raises(CascadeError) as e:
        cascade.translate_coarse([], SegmentRuleSet(), network)
    assert e.value.stage == "coarse"
    with pytest.raises(CascadeError) as e:
        cascade.translate_corpus([["s1"], []], SegmentRuleSet(), network)
    assert e.value.stage == "coarse" and "input 1" in str(e.value)


def test_empty_coarse_output_fails_in_the_fine_stage(network):
    fine = model.factory(tiny_spec(role="fine"), seed=3)
    biased(network, EOS_ID)
    with pytest.raises(CascadeError) as e:
        cascade.translate(["s1", "s2"], SegmentRuleSet(), network, fine)
    assert e.value.stage == "fine"


def test_fine_training_set_keeps_every_pair(network):
    pairs = copy_pairs(10, 12)
    biased(network, EOS_ID)
    examples = cascade.build_fine_training_set(pairs, network, SegmentRuleSet(), verbose=0)
    assert len(examples) == 10
    assert all(noisy == [UNK_ID] for noisy, _ in examples)
    assert [gold for _, gold in examples] == [corpus.numericalize(p.target, network.spec.tgt_vocab) for p in pairs]


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError):
        cascade.translate_coarse(["s1"], SegmentRuleSet(), os.path.join(str(tmp_path), "missing.ckpt"))


def test_check_cascade(network):
    fine = model.factory(tiny_spec(role="fine"), seed=3)
    assert cascade.check_cascade(network, fine)
    with pytest.raises(CheckpointError):
        cascade.check_cascade(fine, network)
    with pytest.raises(CheckpointError):
        cascade.check_cascade(network, model.factory(tiny_spec(role="fine", n_words=5), seed=3))


def test_train_both_networks(tmp_path, data_dir, config_dir):
    cfg = Config(os.path.join(config_dir, "Example.minimal.json"), export_verbose=0, max_steps=2)
    pairs = corpus.clean_corpus(corpus.read_parallel(os.path.join(data_dir, "toy.en"),
                                                     os.path.join(data_dir, "toy.zh")))
    assert len(pairs) == 20
    src_vocab = corpus.build_vocabulary([p.source for p in pairs], cfg.max_vocab_src)
    tgt_vocab = corpus.build_vocabulary([p.target for p in pairs], cfg.max_vocab_tgt)
    coarse_path = os.path.join(str(tmp_path), "coarse.ckpt")
    fine_path = os.path.join(str(tmp_path), "fine.ckpt")
    metrics = os.path.join(str(tmp_path), "coarse.tsv")

    coarse = cascade.train_coarse(cfg, pairs, src_vocab, tgt_vocab, coarse_path, metrics_path=metrics)
    assert coarse.spec.role == "coarse" and os.path.isfile(coarse_path)
    assert len(corpus.read_lines(metrics)) == 2
    fine = cascade.train_fine(cfg, pairs, coarse_path, fine_path)
    assert fine.spec.role == "fine" and fine.spec.src_vocab == tgt_vocab
    assert cascade.check_cascade(coarse, fine)
    rules = SegmentRuleSet.from_config(cfg)
    outputs = cascade.translate_corpus([p.source for p in pairs], rules, coarse_path, max_len=cfg.max_decode_len)
    assert len(outputs) == 20
    for pair, output in zip(pairs, outputs):
        assert len(output) <= len(segmenter.segment(pair.source, rules).segments) * cfg.max_decode_len
    refined = cascade.as_network(fine_path).translate_tokens([list(p.target) for p in pairs[:3]],
                                                             max_len=cfg.max_decode_len)
    assert len(refined) == 3 and all(len(output) <= cfg.max_decode_len for output in refined)


def echo_pairs(n_pairs, n_words, seed):
    """two-clause pairs whose target closes by repeating the translation of the first source word"""
    rng = np.random.RandomState(seed)
    pairs = []
    for i in range(n_pairs):
        first, second = [rng.randint(0, n_words, size=rng.randint(3, 5)) for _ in range(2)]
        source = ["s{}".format(j) for j in first] + [","] + ["s{}".format(j) for j in second]
        target = ["t{}".format(j) for j in first] + ["，"] + ["t{}".format(j) for j in second] + \
            ["t{}".format(first[0])]
        pairs.append(SentencePair(i, tuple(source), tuple(target)))
    return pairs


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_fine_network_improves_on_the_coarse_output(seed):
    pairs = echo_pairs(300, 8, seed)
    rules = SegmentRuleSet(threshold=6, fallback_target_len=6)
    assert all(len(cascade.align_pair(pair, rules)) == 2 for pair in pairs)
    src_vocab = corpus.build_vocabulary([p.source for p in pairs], 20)
    tgt_vocab = corpus.build_vocabulary([p.target for p in pairs], 20)
    schedule = SgdSchedule(initial_lr=1.0, decay_start_step=1500, decay_interval=250, decay_factor=0.5, min_lr=0.01)
    dims = {"hidden_dim": 64, "embed_dim": 64, "encoder_layers": 2, "decoder_layers": 2}

    coarse_spec = tiny_spec(src_vocab=src_vocab, tgt_vocab=tgt_vocab, **dims)
    coarse = train.train(train.TrainingRun(coarse_spec, schedule, batch_size=64, max_steps=2000, seed=seed,
                                           export_verbose=0),
                         cascade.build_coarse_training_set(pairs, rules, src_vocab, tgt_vocab))
    fine_spec = tiny_spec(role="fine", src_vocab=tgt_vocab, tgt_vocab=tgt_vocab, **dims)
    fine = train.train(train.TrainingRun(fine_spec, schedule, batch_size=64, max_steps=2000, seed=seed,
                                         export_verbose=0),
                       cascade.build_fine_training_set(pairs, coarse, rules, max_len=12, verbose=0))

    sources = [list(p.source) for p in pairs]
    references = [[list(p.target)] for p in pairs]
    coarse_bleu = evaluation.corpus_bleu(cascade.translate_corpus(sources, rules, coarse, max_len=12), references)
    cascade_bleu = evaluation.corpus_bleu(cascade.translate_corpus(sources, rules, coarse, fine, max_len=16),
                                          references)
    assert cascade_bleu.score > coarse_bleu.score
