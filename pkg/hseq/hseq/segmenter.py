"""
This module defines the rule-based segmentation of long sentences into short
sequences, the equal-count fallback, and the alignment of source and target
segment lists into training pairs
"""

import collections
import numpy as np


ENGLISH_DELIMITERS = [",", "which", "and", "that", "but", "or", "so"]
CHINESE_DELIMITERS = ["，", "、", "和", "并", "并且", "及", "以及", "其中", "但", "但是", "或", "否则", "因此", "所以"]

# values of SegmentedSentence.method
NONE = "none"
DELIMITER = "delimiter"
COUNT = "count"

MIN_SEGMENT_LEN = 2


SegmentedSentence = collections.namedtuple("SegmentedSentence", ["segments", "method"])
SegmentedSentence.__doc__ = """ordered non-empty token segments; their concatenation is the original sentence"""


class SegmentRuleSet(object):
    """
    Delimiters and lengths driving the segmentation

    english_delimiters, chinese_delimiters (list): tokens after which a long sentence is split.
        English delimiters match case-insensitively.
    threshold (int): sentences longer than this many tokens are segmented (default: 50).
    fallback_target_len (int): part length when splitting by number of words (default: 30).
    method (str): "delimiter" (default) or "count" to split long sentences by number of words only.
    """

    def __init__(self, english_delimiters=None, chinese_delimiters=None, threshold=50, fallback_target_len=30,
                 method=DELIMITER):
        self.english_delimiters = list(english_delimiters) if english_delimiters else list(ENGLISH_DELIMITERS)
        self.chinese_delimiters = list(chinese_delimiters) if chinese_delimiters else list(CHINESE_DELIMITERS)
        self.threshold = int(threshold)
        self.fallback_target_len = int(fallback_target_len)
        self.method = method
        assert self.threshold > 1, "threshold has to be larger than the minimum segment size 1"
        assert self.fallback_target_len >= 1, "fallback_target_len has to be positive"
        assert self.method in [DELIMITER, COUNT], NotImplementedError
        self._lookup = {token.lower() for token in self.english_delimiters} | set(self.chinese_delimiters)

    @classmethod
    def from_file(cls, path, **kwargs):
        """
        read delimiters from a plain-text file, one per line

        ASCII lines replace the English set, the others replace the Chinese set;
        a language without any line keeps its defaults.
        """
        with open(path, "r", encoding="utf-8") as f:
            delimiters = [line.strip() for line in f if line.strip()]
        english = [token for token in delimiters if token.isascii()]
        chinese = [token for token in delimiters if not token.isascii()]
        return cls(english_delimiters=english or None, chinese_delimiters=chinese or None, **kwargs)

    @classmethod
    def from_config(cls, cfg):
        """rule set described by a hseq.config.Config"""
        kwargs = {"threshold": cfg.threshold, "fallback_target_len": cfg.fallback_target_len,
                  "method": cfg.segment_method}
        if cfg.delimiters_file:
            return cls.from_file(cfg.delimiters_file, **kwargs)
        return cls(**kwargs)

    def is_delimiter(self, token):
        return token.lower() in self._lookup

    @property
    def count_len(self):
        """part length for count splitting, never above the threshold"""
        return min(self.fallback_target_len, self.threshold)


def split_evenly(tokens, n_parts):
    """split tokens into n_parts contiguous parts whose sizes differ by at most one"""
    tokens = list(tokens)
    assert 1 <= n_parts <= len(tokens), "cannot split {} tokens into {} parts".format(len(tokens), n_parts)
    return [tokens[idx[0]:idx[-1] + 1] for idx in np.array_split(np.arange(len(tokens)), n_parts)]


def segment_by_count(tokens, target_len):
    """split into ceil(len / target_len) balanced parts"""
    tokens = list(tokens)
    if not tokens:
        raise ValueError("cannot segment an empty sentence")
    if target_len < 1:
        raise ValueError("target_len has to be positive, got {}".format(target_len))
    n_parts = -(-len(tokens) // target_len)
    return split_evenly(tokens, n_parts)


def _split_at_delimiters(tokens, rules):
    pieces, current = [], []
    for token in tokens:
        current.append(token)
        if rules.is_delimiter(token):
            pieces.append(current)
            current = []
    if current:
        pieces.append(current)
    return pieces


def _merge_short(pieces):
    merged = []
    for piece in pieces:
        if len(piece) < MIN_SEGMENT_LEN and merged:
            merged[-1].extend(piece)
        else:
            merged.append(list(piece))
    # the first piece has nothing before it, it joins the next one
    if len(merged) > 1 and len(merged[0]) < MIN_SEGMENT_LEN:
        merged[1] = merged[0] + merged[1]
        merged = merged[1:]
    return merged


def segment(tokens, rules, force=False):
    """
    Segment a sentence into short sequences

    Args:
        tokens (list): the sentence tokens
        rules (SegmentRuleSet): delimiters and lengths
        force (bool): segment even a sentence within the threshold (the target side of a long pair)

    Returns:
        SegmentedSentence: one segment (method "none") for sentences within the threshold,
        otherwise segments split after every delimiter, with too short pieces merged into
        their neighbour and too long pieces split by count (method "delimiter"), or split
        by count alone when no delimiter splits the sentence (method "count")
    """
    tokens = list(tokens)
    if not tokens:
        raise ValueError("cannot segment an empty sentence")
    short = len(tokens) <= rules.threshold
    if short and not force:
        return SegmentedSentence([tokens], NONE)
    if rules.method == COUNT:
        parts = segment_by_count(tokens, rules.count_len)
        return SegmentedSentence(parts, COUNT if len(parts) > 1 else NONE)

    pieces = _merge_short(_split_at_delimiters(tokens, rules))
    if len(pieces) == 1:
        if short:
            return SegmentedSentence([tokens], NONE)
        return SegmentedSentence(segment_by_count(tokens, rules.count_len), COUNT)
    segments = []
    for piece in pieces:
        if len(piece) > rules.threshold:
            segments.extend(segment_by_count(piece, rules.count_len))
        else:
            segments.append(piece)
    return SegmentedSentence(segments, DELIMITER)


def flatten(segmented):
    """the original token sequence of a SegmentedSentence"""
    return [token for seg in segmented.segments for token in seg]


def align_segments(src, tgt):
    """
    Pair source and target segments by index

    When the counts differ, the side with more segments is re-split by count from its
    original token stream into as many parts as the other side has.

    Returns:
        list of (source segment, target segment)
    """
    src_segments, tgt_segments = src.segments, tgt.segments
    if len(src_segments) > len(tgt_segments):
        src_segments = split_evenly(flatten(src), len(tgt_segments))
    elif len(tgt_segments) > len(src_segments):
        tgt_segments = split_evenly(flatten(tgt), len(src_segments))
    return list(zip(src_segments, tgt_segments))
