"""
This module defines the coarse-to-fine cascade: the coarse network translates
the segments of a sentence, their outputs are concatenated, and the fine
network re-decodes the concatenation into the final translation. It also
builds the training sets of both networks and drives their training runs.
"""

from hseq import segmenter, checkpoint, train, model
from hseq.corpus import UNK_ID, numericalize, denumericalize
from hseq.utils import TimeLogger, HseqError, CascadeError, CheckpointError


def as_network(network, dtype="float32"):
    """a Seq2Seq, loading it first when given a checkpoint path"""
    if isinstance(network, str):
        return checkpoint.load_model(network, dtype=dtype)
    return network


def align_pair(pair, rules):
    """
    Aligned (source segment, target segment) training pairs of one sentence pair

    Short pairs pass through intact. Long pairs are segmented on both sides, the target
    side even when it is itself within the threshold, and aligned by index. If the
    alignment still leaves a source segment above the threshold, both sides are split
    into the same number of equal parts; a pair whose target is too short for that
    yields nothing.
    """
    source, target = list(pair.source), list(pair.target)
    if len(source) <= rules.threshold:
        return [(source, target)]
    aligned = segmenter.align_segments(segmenter.segment(source, rules),
                                       segmenter.segment(target, rules, force=True))
    if all(len(src) <= rules.threshold for src, _ in aligned):
        return aligned
    n_parts = -(-len(source) // rules.count_len)
    if n_parts > len(target):
        return []
    return list(zip(segmenter.split_evenly(source, n_parts), segmenter.split_evenly(target, n_parts)))


def build_coarse_training_set(pairs, rules, src_vocab, tgt_vocab):
    """
    Training set of the coarse network: short pairs and the aligned segments of long pairs

    Args:
        pairs (list): cleaned SentencePairs
        rules (SegmentRuleSet)
        src_vocab, tgt_vocab (Vocabulary)

    Returns:
        list of (src ids, tgt ids), no source longer than rules.threshold
    """
    examples = []
    for pair in pairs:
        for src, tgt in align_pair(pair, rules):
            examples.append((numericalize(src, src_vocab), numericalize(tgt, tgt_vocab)))
    return examples


def _coarse_ids(sentences, rules, coarse, max_len=100, batch_size=64):
    """concatenated coarse output ids of every sentence, segments decoded together in batches"""
    owners, segments = [], []
    for i, tokens in enumerate(sentences):
        if len(tokens) == 0:
            raise CascadeError("coarse", "cannot translate an empty sentence (input {})".format(i))
        for seg in segmenter.segment(tokens, rules).segments:
            owners.append(i)
            segments.append(numericalize(seg, coarse.spec.src_vocab))
    try:
        decoded = coarse.translate_ids(segments, max_len=max_len, batch_size=batch_size)
    except (ValueError, HseqError) as e:
        raise CascadeError("coarse", str(e)) from e
    outputs = [[] for _ in sentences]
    for owner, ids in zip(owners, decoded):
        outputs[owner].extend(ids)
    return outputs


def translate_coarse(src_tokens, rules, coarse, max_len=100):
    """
    Coarse translation of one sentence

    The source is segmented, every segment greedily decoded on its own, and the outputs
    concatenated in source order.

    Args:
        src_tokens (list): source tokens
        rules (SegmentRuleSet)
        coarse (Seq2Seq or str): coarse network or its checkpoint path
        max_len (int): decoding cap per segment

    Returns:
        list of target tokens
    """
    coarse = as_network(coarse)
    ids = _coarse_ids([list(src_tokens)], rules, coarse, max_len)[0]
    return denumericalize(ids, coarse.spec.tgt_vocab)


def build_fine_training_set(pairs, coarse, rules, max_len=100, batch_size=64, verbose=1):
    """
    Training set of the fine network: (coarse output, gold target) for every pair

    An empty coarse output becomes a single <unk> so every pair yields one example.

    Args:
        pairs (list): SentencePairs
        coarse (Seq2Seq or str): trained coarse network or its checkpoint path

    Returns:
        list of (noisy target ids, gold target ids) in the coarse target vocabulary

    Raises:
        CheckpointError: the coarse checkpoint is missing or unreadable
    """
    coarse = as_network(coarse)
    logger = TimeLogger(time_logger_step=1, hierachy=2, verbose=verbose)
    outputs = _coarse_ids([list(pair.source) for pair in pairs], rules, coarse, max_len, batch_size)
    vocab = coarse.spec.tgt_vocab
    examples = []
    n_empty = 0
    for pair, ids in zip(pairs, outputs):
        if not ids:
            n_empty += 1
            ids = [UNK_ID]
        examples.append((list(ids), numericalize(pair.target, vocab)))
    logger.log("Decoded {} sentences with the coarse network ({} empty outputs)".format(len(pairs), n_empty))
    return examples


def translate_corpus(sentences, rules, coarse, fine=None, max_len=100, batch_size=64):
    """
    Translate sentences through the cascade, or the coarse network alone when fine is None

    Raises:
        CascadeError: naming the stage ("coarse" or "fine") that failed
    """
    coarse = as_network(coarse)
    sentences = [list(tokens) for tokens in sentences]
    coarse_outputs = _coarse_ids(sentences, rules, coarse, max_len, batch_size)
    coarse_tokens = [denumericalize(ids, coarse.spec.tgt_vocab) for ids in coarse_outputs]
    if fine is None:
        return coarse_tokens
    fine = as_network(fine)
    empty = [i for i, tokens in enumerate(coarse_tokens) if not tokens]
    if empty:
        raise CascadeError("fine", "the coarse output of input {} is empty".format(empty[0]))
    try:
        return fine.translate_tokens(coarse_tokens, max_len=max_len, batch_size=batch_size)
    except (ValueError, HseqError) as e:
        raise CascadeError("fine", str(e)) from e


def translate(src_tokens, rules, coarse, fine, max_len=100):
    """
    Translate one sentence through the coarse and the fine network

    Returns:
        list of target tokens, the fine network's greedy decoding of the concatenated coarse output
    """
    return translate_corpus([src_tokens], rules, coarse, fine, max_len)[0]


def train_coarse(cfg, pairs, src_vocab, tgt_vocab, checkpoint_path=None, metrics_path=None, init_checkpoint=None,
                 valid_pairs=None):
    """build the coarse training set and train (or fine-tune from init_checkpoint) the coarse network"""
    rules = segmenter.SegmentRuleSet.from_config(cfg)
    spec = model.NetworkSpec.from_config(cfg, "coarse", src_vocab, tgt_vocab)
    run = train.TrainingRun.from_config(cfg, spec, metrics_path=metrics_path)
    dataset = build_coarse_training_set(pairs, rules, src_vocab, tgt_vocab)
    valid_set = build_coarse_training_set(valid_pairs, rules, src_vocab, tgt_vocab) if valid_pairs else None
    TimeLogger(hierachy=1, verbose=cfg.export_verbose).log(
        "Coarse training set: {} examples from {} pairs".format(len(dataset), len(pairs)))
    if init_checkpoint is not None:
        return train.fine_tune(init_checkpoint, run, dataset, valid_set, checkpoint_path)
    return train.train(run, dataset, valid_set, checkpoint_path)


def train_fine(cfg, pairs, coarse, checkpoint_path=None, metrics_path=None, init_checkpoint=None,
               valid_pairs=None):
    """decode the pairs with the coarse network and train (or fine-tune) the fine network on the outputs"""
    coarse = as_network(coarse, cfg.dtype)
    rules = segmenter.SegmentRuleSet.from_config(cfg)
    vocab = coarse.spec.tgt_vocab
    spec = model.NetworkSpec.from_config(cfg, "fine", vocab, vocab)
    run = train.TrainingRun.from_config(cfg, spec, metrics_path=metrics_path)
    dataset = build_fine_training_set(pairs, coarse, rules, cfg.max_decode_len, verbose=cfg.export_verbose)
    valid_set = build_fine_training_set(valid_pairs, coarse, rules, cfg.max_decode_len,
                                        verbose=cfg.export_verbose) if valid_pairs else None
    if init_checkpoint is not None:
        return train.fine_tune(init_checkpoint, run, dataset, valid_set, checkpoint_path)
    return train.train(run, dataset, valid_set, checkpoint_path)


def check_cascade(coarse, fine):
    """the fine network has to read the coarse network's target vocabulary"""
    if fine.spec.role != "fine" or coarse.spec.role != "coarse":
        raise CheckpointError("Expected a coarse and a fine checkpoint, got {} and {}".format(
            coarse.spec.role, fine.spec.role))
    if fine.spec.src_vocab != coarse.spec.tgt_vocab:
        raise CheckpointError("The fine network vocabulary differs from the coarse target vocabulary")
    return True
