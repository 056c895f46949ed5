"""
This module defines the parallel corpus: reading line-aligned files, the
cleaning filters, capped vocabularies with UNK mapping, numericalization,
multi-reference grouping, corpus statistics, data partition and the batched
training pipeline.
"""

import re
import collections
import numpy as np
import pandas as pd
import tensorflow as tf
from hseq.utils import AlignmentError, DataError
from hseq import segmenter


PAD, UNK, SOS, EOS = "<pad>", "<unk>", "<sos>", "<eos>"
SPECIAL_TOKENS = [PAD, UNK, SOS, EOS]
PAD_ID, UNK_ID, SOS_ID, EOS_ID = 0, 1, 2, 3

URL_MARKERS = ("http://", "https://", "www.")
# CJK ideographs and punctuation, fullwidth forms, Latin, digits, ASCII and general punctuation
LEGAL_CHARS = re.compile("^[\u0020-~\u00a0-\u00ff\u2000-\u206f\u3000-\u303f"
                         "\u3400-\u4dbf\u4e00-\u9fff\uf900-\ufaff\ufe30-\ufe4f\uff00-\uffef]*$")
CJK_CHAR = re.compile("[\u4e00-\u9fff]")


class SentencePair(collections.namedtuple("SentencePair", ["id", "source", "target"])):
    """a cleaned parallel pair; source and target are tuples of tokens"""
    __slots__ = ()

    @property
    def source_length(self):
        return len(self.source)


MultiRefGroup = collections.namedtuple("MultiRefGroup", ["source", "references"])
CorpusStats = collections.namedtuple("CorpusStats", ["original_count", "kept_count", "short_ratio",
                                                     "long_ratio", "avg_segments"])


def read_lines(path):
    """read a UTF-8 text file into a list of lines without line breaks"""
    with open(path, "r", encoding="utf-8") as f:
        return f.read().splitlines()


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


def read_parallel(src_path, tgt_path):
    """
    read two line-aligned files into raw (source line, target line) pairs

    Raises:
        AlignmentError: the files have different line counts
    """
    src_lines, tgt_lines = read_lines(src_path), read_lines(tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise AlignmentError(src_path, len(src_lines), tgt_path, len(tgt_lines))
    return list(zip(src_lines, tgt_lines))


def normalize_line(line):
    """trim and collapse runs of whitespace to single spaces"""
    if not isinstance(line, str):
        line = " ".join(line)
    return " ".join(line.split())


def is_illegal(line):
    """default deny predicate: URLs or characters outside the Chinese/Latin/digit/punctuation whitelist"""
    lowered = line.lower()
    if any(marker in lowered for marker in URL_MARKERS):
        return True
    return LEGAL_CHARS.match(line) is None


def clean_corpus(pairs, deny=is_illegal, require_cjk_target=True):
    """
    Filter a raw parallel corpus

    Args:
        pairs (list): SentencePair or (source, target) tuples; sides are strings or token sequences
        deny (callable): predicate on a normalized line, True removes the pair
        require_cjk_target (bool): remove pairs whose target holds no CJK ideograph

    Returns:
        list of SentencePair in input order; ids are the input positions unless the input
        already carries SentencePair ids
    """
    cleaned = []
    for i, pair in enumerate(pairs):
        pair_id = pair.id if isinstance(pair, SentencePair) else i
        source, target = (pair.source, pair.target) if isinstance(pair, SentencePair) else pair
        source, target = normalize_line(source), normalize_line(target)
        if not source or not target:
            continue
        if deny is not None and (deny(source) or deny(target)):
            continue
        if require_cjk_target and CJK_CHAR.search(target) is None:
            continue
        cleaned.append(SentencePair(pair_id, tuple(source.split(" ")), tuple(target.split(" "))))
    return cleaned


class Vocabulary(object):
    """
    token <-> id bijection with reserved ids 0=<pad>, 1=<unk>, 2=<sos>, 3=<eos>

    Unknown tokens look up to UNK_ID.
    """

    def __init__(self, tokens, max_size=None):
        tokens = list(tokens)
        if tokens[:len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise DataError("The first vocabulary entries have to be {}".format(SPECIAL_TOKENS))
        if len(set(tokens)) != len(tokens):
            raise DataError("Vocabulary holds duplicated tokens")
        self.max_size = max_size if max_size is not None else len(tokens)
        if len(tokens) > self.max_size:
            raise DataError("Vocabulary of size {} exceeds its cap {}".format(len(tokens), self.max_size))
        self.tokens = tokens
        self.index = {token: i for i, token in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def lookup(self, token):
        return self.index.get(token, UNK_ID)

    def token(self, idx):
        return self.tokens[idx]

    def save(self, path):
        write_lines(path, self.tokens)

    @classmethod
    def load(cls, path):
        tokens = read_lines(path)
        if tokens[:len(SPECIAL_TOKENS)] != SPECIAL_TOKENS:
            raise DataError("{}: the first four lines have to be {}".format(path, " ".join(SPECIAL_TOKENS)))
        return cls(tokens)


def build_vocabulary(sentences, max_size):
    """
    Build a vocabulary from the most common tokens

    Args:
        sentences (list): token sequences of one corpus side
        max_size (int): cap on the vocabulary size, reserved tokens included

    Returns:
        Vocabulary ranked by descending frequency, ties broken by first occurrence
    """
    assert max_size >= len(SPECIAL_TOKENS) + 1, "max_size has to leave room for one non-reserved token"
    counts = collections.Counter(token for sentence in sentences for token in sentence
                                 if token not in SPECIAL_TOKENS)
    if not counts:
        raise DataError("Cannot build a vocabulary from an empty corpus side")
    # Counter keeps first-occurrence order and most_common sorts stably
    ranked = [token for token, _ in counts.most_common(max_size - len(SPECIAL_TOKENS))]
    return Vocabulary(SPECIAL_TOKENS + ranked, max_size=max_size)


def numericalize(sentence, vocab, add_sos_eos=False):
    """map tokens to ids, unknown tokens to UNK_ID"""
    ids = [vocab.lookup(token) for token in sentence]
    if add_sos_eos:
        ids = [SOS_ID] + ids + [EOS_ID]
    return ids


def denumericalize(ids, vocab, strip_special=True):
    """map ids back to tokens, dropping <pad>, <sos> and <eos> unless asked otherwise"""
    dropped = {PAD_ID, SOS_ID, EOS_ID} if strip_special else set()
    return [vocab.token(int(i)) for i in ids if int(i) not in dropped]


def group_multi_references(pairs):
    """merge pairs sharing a source into one group with all distinct targets, in first-occurrence order"""
    groups = collections.OrderedDict()
    for pair in pairs:
        references = groups.setdefault(tuple(pair.source), [])
        if tuple(pair.target) not in references:
            references.append(tuple(pair.target))
    return [MultiRefGroup(source, references) for source, references in groups.items()]


def corpus_stats(pairs, length_threshold=50, rules=None, original_count=None):
    """
    Long/short ratios and average number of segments of a cleaned corpus

    Args:
        pairs (list): cleaned SentencePairs
        length_threshold (int): sentences with more source tokens are long
        rules (SegmentRuleSet): segmentation rules, by default the standard rules at length_threshold
        original_count (int): number of pairs before cleaning, default len(pairs)
    """
    if not pairs:
        raise DataError("Cannot compute statistics of an empty corpus")
    rules = rules if rules is not None else segmenter.SegmentRuleSet(threshold=length_threshold)
    df = pd.DataFrame({
        "source_length": [pair.source_length for pair in pairs],
        "n_segments": [len(segmenter.segment(pair.source, rules).segments) for pair in pairs],
    })
    long_ratio = float((df.source_length > length_threshold).mean())
    return CorpusStats(original_count=len(pairs) if original_count is None else original_count,
                       kept_count=len(pairs), short_ratio=1.0 - long_ratio, long_ratio=long_ratio,
                       avg_segments=float(df.n_segments.mean()))


def random_partition(pairs, valid_size, test_size, seed):
    """random train / dev / test partition of a cleaned corpus"""
    n = len(pairs)
    assert valid_size + test_size < n, "dev and test sets leave no training data"
    random_pos = np.random.RandomState(seed).permutation(n)
    ntrain = n - valid_size - test_size
    return {
        "train": [pairs[i] for i in sorted(random_pos[:ntrain])],
        "valid": [pairs[i] for i in sorted(random_pos[ntrain:ntrain + valid_size])],
        "test": [pairs[i] for i in sorted(random_pos[ntrain + valid_size:])],
    }


def numericalize_pairs(pairs, src_vocab, tgt_vocab):
    """(src ids, tgt ids) examples from SentencePairs"""
    return [(numericalize(pair.source, src_vocab), numericalize(pair.target, tgt_vocab)) for pair in pairs]


def pad_batch(sequences, pad_to=None):
    """stack id sequences into a PAD-filled int32 matrix"""
    width = pad_to if pad_to is not None else max(len(seq) for seq in sequences)
    batch = np.full((len(sequences), width), PAD_ID, dtype=np.int32)
    for i, seq in enumerate(sequences):
        batch[i, :len(seq)] = seq
    return batch


def make_batches(examples, batch_size, seed, shuffle=True, repeat=True):
    """
    Batched teacher-forcing dataset

    Each element is (src [B, S], tgt_in [B, T], tgt_out [B, T]) where tgt_in starts with <sos>,
    tgt_out ends with <eos>, and both are PAD-filled to the longest sentence of the batch.
    Shuffling happens at epoch boundaries with the run seed.
    """
    def generator():
        for src, tgt in examples:
            yield src, [SOS_ID] + list(tgt), list(tgt) + [EOS_ID]

    spec = tf.TensorSpec(shape=[None], dtype=tf.int32)
    dataset = tf.data.Dataset.from_generator(generator, output_signature=(spec, spec, spec))
    if shuffle:
        dataset = dataset.shuffle(buffer_size=max(len(examples), 1), seed=seed, reshuffle_each_iteration=True)
    dataset = dataset.padded_batch(batch_size, padding_values=PAD_ID)
    if repeat:
        dataset = dataset.repeat()
    return dataset
