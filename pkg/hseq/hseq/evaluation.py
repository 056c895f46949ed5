"""
This module defines the evaluation of translations: corpus and sentence level
4-gram BLEU on the 0-100 scale, multi-reference selection, perplexity, and the
long/short and length-bucket reports
"""

import math
import collections
import pandas as pd
from hseq import train
from hseq.utils import DataError

MAX_ORDER = 4
DEFAULT_BUCKETS = [(0, 50), (50, 60), (60, 70), (70, 80), (80, 90), (90, math.inf)]


BleuScore = collections.namedtuple("BleuScore", ["score", "precisions", "brevity_penalty", "hyp_len", "ref_len"])
BleuScore.__doc__ = """score in [0, 100], n-gram precisions p_1..p_4, brevity penalty, token counts"""

Bucket = collections.namedtuple("Bucket", ["low", "high", "bleu", "count"])


class BucketReport(object):
    """corpus BLEU of the sentences whose source length falls in each [low, high) range"""

    def __init__(self, buckets):
        self.buckets = list(buckets)

    @property
    def total(self):
        return sum(bucket.count for bucket in self.buckets)

    def to_frame(self):
        return pd.DataFrame({
            "range": ["[{}, {})".format(b.low, b.high) for b in self.buckets],
            "bleu": [b.bleu.score if b.bleu is not None else None for b in self.buckets],
            "count": [b.count for b in self.buckets],
        })


def ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) + 1 - n)]


def _as_reference_list(references):
    """a list of references; a bare token list is a single reference"""
    references = list(references)
    if not references or isinstance(references[0], str):
        return [references]
    return [list(reference) for reference in references]


def _closest_ref_length(hyp_len, references):
    return min((len(reference) for reference in references), key=lambda ref_len: (abs(ref_len - hyp_len), ref_len))


def _counts(hypothesis, references):
    """clipped n-gram matches and n-gram totals for n = 1..4"""
    matches, totals = [0] * MAX_ORDER, [0] * MAX_ORDER
    for n in range(1, MAX_ORDER + 1):
        counts = collections.Counter(ngrams(hypothesis, n))
        max_counts = collections.Counter()
        for reference in references:
            max_counts |= collections.Counter(ngrams(reference, n))
        matches[n - 1] = sum(min(count, max_counts[ngram]) for ngram, count in counts.items())
        totals[n - 1] = sum(counts.values())
    return matches, totals


def _brevity_penalty(hyp_len, ref_len):
    if hyp_len > ref_len:
        return 1.0
    # an empty hypothesis is scored as one token long
    return math.exp(1 - ref_len / max(hyp_len, 1))


def _score(precisions, bp):
    if min(precisions) <= 0:
        return 0.0
    return 100 * bp * math.exp(math.fsum(math.log(p) for p in precisions) / MAX_ORDER)


def corpus_bleu(hypotheses, references):
    """
    Corpus-level 4-gram BLEU

    Args:
        hypotheses (list): token lists
        references (list): per hypothesis, a list of reference token lists (or a single token list)

    Returns:
        BleuScore, score 0 when any corpus precision is 0
    """
    if len(hypotheses) != len(references):
        raise DataError("{} hypotheses but {} references".format(len(hypotheses), len(references)))
    if not hypotheses:
        raise DataError("Cannot compute BLEU of an empty corpus")
    matches, totals = [0] * MAX_ORDER, [0] * MAX_ORDER
    hyp_len, ref_len = 0, 0
    for hypothesis, refs in zip(hypotheses, references):
        hypothesis, refs = list(hypothesis), _as_reference_list(refs)
        sent_matches, sent_totals = _counts(hypothesis, refs)
        matches = [a + b for a, b in zip(matches, sent_matches)]
        totals = [a + b for a, b in zip(totals, sent_totals)]
        hyp_len += len(hypothesis)
        ref_len += _closest_ref_length(len(hypothesis), refs)
    precisions = [m / t if t > 0 else 0.0 for m, t in zip(matches, totals)]
    bp = _brevity_penalty(hyp_len, ref_len)
    return BleuScore(_score(precisions, bp), precisions, bp, hyp_len, ref_len)


def sentence_bleu(hypothesis, references, smooth=True):
    """
    Sentence-level BLEU of one hypothesis

    With smoothing, 1 is added to the matches and the totals of every order n >= 2;
    unigram precision stays unsmoothed, so a hypothesis sharing no token scores 0.
    Without smoothing this is corpus_bleu of a one-sentence corpus.
    """
    hypothesis, references = list(hypothesis), _as_reference_list(references)
    if not hypothesis:
        return 0.0
    if not smooth:
        return corpus_bleu([hypothesis], [references]).score
    matches, totals = _counts(hypothesis, references)
    precisions = [matches[0] / totals[0]] + [(m + 1) / (t + 1) for m, t in zip(matches[1:], totals[1:])]
    bp = _brevity_penalty(len(hypothesis), _closest_ref_length(len(hypothesis), references))
    return _score(precisions, bp)


def sentence_bleu_smoothed(hypothesis, references):
    return sentence_bleu(hypothesis, references, smooth=True)


def multi_ref_select(hypothesis, group):
    """
    Pick the reference of a MultiRefGroup scoring the highest smoothed sentence BLEU

    Returns:
        (best reference, score), ties go to the earliest reference
    """
    best, best_score = None, -1.0
    for reference in group.references:
        score = sentence_bleu_smoothed(hypothesis, reference)
        if score > best_score:
            best, best_score = list(reference), score
    return best, best_score


def select_references(hypotheses, groups):
    """the selected reference of every hypothesis, for corpus scoring"""
    return [multi_ref_select(hypothesis, group)[0] for hypothesis, group in zip(hypotheses, groups)]


def perplexity(network, examples, batch_size=256):
    """exp of the mean teacher-forced cross-entropy per target token (<eos> included)"""
    if not examples:
        raise DataError("Cannot compute the perplexity of an empty dataset")
    total, n_tokens = train.eval_model(network, examples, batch_size)
    return math.exp(total / n_tokens)


def bucket_report(hypotheses, references, source_lengths, ranges=None):
    """
    Corpus BLEU grouped by source length

    Args:
        ranges (list): ordered disjoint [low, high) pairs (default: DEFAULT_BUCKETS)

    Returns:
        BucketReport, empty buckets carry count 0 and no score
    """
    ranges = DEFAULT_BUCKETS if ranges is None else ranges
    assert all(low < high for low, high in ranges), "bucket ranges have to be non-empty"
    assert all(a[1] <= b[0] for a, b in zip(ranges[:-1], ranges[1:])), "bucket ranges have to be ordered"
    if not len(hypotheses) == len(references) == len(source_lengths):
        raise DataError("Hypotheses, references and source lengths are not aligned")
    lengths = pd.Series(list(source_lengths))
    buckets = []
    for low, high in ranges:
        idx = lengths.index[(lengths >= low) & (lengths < high)].tolist()
        bleu = corpus_bleu([hypotheses[i] for i in idx], [references[i] for i in idx]) if idx else None
        buckets.append(Bucket(low, high, bleu, len(idx)))
    return BucketReport(buckets)


def long_short_report(hypotheses, references, source_lengths, threshold=50):
    """BLEU and sentence count of the full set, the short (<= threshold) and the long sentences"""
    report = bucket_report(hypotheses, references, source_lengths, [(0, threshold + 1), (threshold + 1, math.inf)])
    short, long = report.buckets
    overall = corpus_bleu(hypotheses, references)
    return pd.DataFrame({
        "subset": ["all", "short", "long"],
        "bleu": [overall.score] + [b.bleu.score if b.bleu is not None else None for b in (short, long)],
        "count": [len(hypotheses), short.count, long.count],
    }).set_index("subset")


def write_report(path, overall, long_short=None, buckets=None, ppl=None):
    """
    Write the plain-text evaluation report to path and its tab-separated twin to path + ".tsv"

    Args:
        overall (BleuScore)
        long_short (pd.DataFrame): long_short_report output
        buckets (BucketReport)
        ppl (float): perplexity
    """
    lines = ["BLEU = {:.3f}".format(overall.score),
             "precisions = " + " / ".join("{:.4f}".format(p) for p in overall.precisions),
             "BP = {:.4f} (hyp_len = {}, ref_len = {})".format(overall.brevity_penalty, overall.hyp_len,
                                                               overall.ref_len)]
    rows = [{"metric": "bleu", "subset": "all", "value": overall.score}]
    if ppl is not None:
        lines.append("perplexity = {:.4f}".format(ppl))
        rows.append({"metric": "perplexity", "subset": "all", "value": ppl})
    if long_short is not None:
        lines += ["", long_short.to_string()]
        rows += [{"metric": "bleu", "subset": subset, "value": row.bleu} for subset, row in long_short.iterrows()
                 if subset != "all"]
    if buckets is not None:
        frame = buckets.to_frame()
        lines += ["", frame.to_string(index=False)]
        rows += [{"metric": "bleu", "subset": row.range, "value": row.bleu} for row in frame.itertuples()]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    pd.DataFrame(rows, columns=["metric", "subset", "value"]).to_csv(path + ".tsv", sep="\t", index=False)
