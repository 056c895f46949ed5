"""
This module defines the command line: segment, stats, build-vocab,
train-coarse, train-fine, translate and evaluate. Exit codes are 0 on
success, 1 for usage errors, 2 for data errors and 3 for runtime errors
(divergence, cascade failures).
"""

import os
import sys
import argparse
import pandas as pd
from hseq import corpus, segmenter, cascade, checkpoint, evaluation
from hseq.config import Config
from hseq.utils import HseqError, UsageError, DataError, TimeLogger, set_seed
from hseq.version import get_msg

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser raising UsageError instead of exiting"""
    def error(self, message):
        raise UsageError("{}\n{}".format(message, self.format_usage().strip()))


def add_config_arguments(parser, steps=False):
    parser.add_argument('--config', type=str, help="run configuration, json or key=value lines")
    parser.add_argument('--threshold', type=int, help="segmentation threshold in tokens (default: 50)")
    parser.add_argument('--seed', type=int, help="seed of every random choice (default: 1000)")
    if steps:
        parser.add_argument('--steps', type=int, help="number of training steps")
        parser.add_argument('--init', type=str, help="checkpoint to fine-tune from")
        parser.add_argument('--metrics', type=str, help="metrics log, one 'step lr loss' line per step")


def build_parser():
    parser = ArgumentParser(prog="hseq", description='Hierarchical coarse-to-fine sequence-to-sequence translation')
    verbs = parser.add_subparsers(dest="verb", metavar="verb", parser_class=ArgumentParser)
    verbs.required = True

    p = verbs.add_parser("segment", help="segment long sentences, one segment per line and a blank line after each sentence")
    p.add_argument('--input', required=True, type=str)
    p.add_argument('--output', required=True, type=str)
    p.add_argument('--delimiters', type=str, help="delimiter file, one delimiter per line")
    add_config_arguments(p)

    p = verbs.add_parser("stats", help="clean a parallel corpus and report its length statistics")
    p.add_argument('--src', required=True, type=str)
    p.add_argument('--tgt', required=True, type=str)
    p.add_argument('--output', type=str, help="tab-separated statistics (default: print only)")
    add_config_arguments(p)

    p = verbs.add_parser("build-vocab", help="build the capped source and target vocabularies")
    p.add_argument('--src', required=True, type=str)
    p.add_argument('--tgt', required=True, type=str)
    p.add_argument('--vocab-src', required=True, type=str)
    p.add_argument('--vocab-tgt', required=True, type=str)
    add_config_arguments(p)

    p = verbs.add_parser("train-coarse", help="train the coarse network on short pairs and aligned segments")
    p.add_argument('--src', required=True, type=str)
    p.add_argument('--tgt', required=True, type=str)
    p.add_argument('--vocab-src', required=True, type=str)
    p.add_argument('--vocab-tgt', required=True, type=str)
    p.add_argument('--output', required=True, type=str, help="checkpoint to write")
    add_config_arguments(p, steps=True)

    p = verbs.add_parser("train-fine", help="train the fine network on coarse outputs")
    p.add_argument('--src', required=True, type=str)
    p.add_argument('--tgt', required=True, type=str)
    p.add_argument('--coarse', required=True, type=str, help="trained coarse checkpoint")
    p.add_argument('--output', required=True, type=str, help="checkpoint to write")
    add_config_arguments(p, steps=True)

    p = verbs.add_parser("translate", help="translate one sentence per line, coarse only when --fine is omitted")
    p.add_argument('--coarse', required=True, type=str)
    p.add_argument('--fine', type=str)
    p.add_argument('--input', required=True, type=str)
    p.add_argument('--output', required=True, type=str)
    add_config_arguments(p)

    p = verbs.add_parser("evaluate", help="BLEU, long/short and length-bucket report")
    p.add_argument('--hyp', required=True, type=str)
    p.add_argument('--ref', required=True, type=str, action="append",
                   help="reference file, repeat for multiple references")
    p.add_argument('--src', type=str, help="source file, needed for the length reports and perplexity")
    p.add_argument('--model', type=str, help="checkpoint whose perplexity on (src, first ref) is reported")
    p.add_argument('--output', required=True, type=str, help="text report, a .tsv twin is written next to it")
    add_config_arguments(p)
    return parser


def check_paths(args):
    """every input path exists and every output directory exists, before anything is read"""
    for key in ["input", "src", "tgt", "coarse", "fine", "init", "hyp", "model", "config", "delimiters"]:
        path = getattr(args, key, None)
        if path is not None and not os.path.isfile(path):
            raise UsageError("--{} {}: no such file".format(key, path))
    for path in getattr(args, "ref", None) or []:
        if not os.path.isfile(path):
            raise UsageError("--ref {}: no such file".format(path))
    if args.verb != "build-vocab":
        for key in ["vocab_src", "vocab_tgt"]:
            path = getattr(args, key, None)
            if path is not None and not os.path.isfile(path):
                raise UsageError("--{} {}: no such file".format(key.replace("_", "-"), path))
    outputs = ["output", "metrics"] + (["vocab_src", "vocab_tgt"] if args.verb == "build-vocab" else [])
    for key in outputs:
        path = getattr(args, key, None)
        if path is not None and not os.path.isdir(os.path.dirname(os.path.abspath(path))):
            raise UsageError("--{} {}: directory does not exist".format(key.replace("_", "-"), path))


def load_config(args):
    overrides = {"threshold": args.threshold, "seed": args.seed, "max_steps": getattr(args, "steps", None),
                 "delimiters_file": getattr(args, "delimiters", None)}
    try:
        return Config(args.config, **overrides)
    except (AssertionError, ValueError) as e:
        raise UsageError("invalid configuration {}: {}".format(args.config, e))


def read_sentences(path):
    """tokenized non-empty lines; an empty line is reported with its line number"""
    sentences = []
    for i, line in enumerate(corpus.read_lines(path)):
        tokens = corpus.normalize_line(line).split()
        if not tokens:
            raise DataError("{}:{}: empty line".format(path, i + 1))
        sentences.append(tokens)
    return sentences


def read_clean_corpus(src_path, tgt_path, logger):
    raw = corpus.read_parallel(src_path, tgt_path)
    pairs = corpus.clean_corpus(raw)
    if not pairs:
        raise DataError("No pair of {} / {} survives cleaning".format(src_path, tgt_path))
    logger.log("Read {} pairs, {} kept after cleaning".format(len(raw), len(pairs)))
    return pairs, len(raw)


def do_segment(args, cfg, logger):
    rules = segmenter.SegmentRuleSet.from_config(cfg)
    sentences = read_sentences(args.input)
    lines = []
    for tokens in sentences:
        lines.extend(" ".join(seg) for seg in segmenter.segment(tokens, rules).segments)
        lines.append("")
    corpus.write_lines(args.output, lines)
    logger.log("Segmented {} sentences into {}".format(len(sentences), args.output))


def do_stats(args, cfg, logger):
    pairs, n_raw = read_clean_corpus(args.src, args.tgt, logger)
    stats = corpus.corpus_stats(pairs, cfg.threshold, segmenter.SegmentRuleSet.from_config(cfg), n_raw)
    frame = pd.DataFrame([stats._asdict()])
    print(frame.to_string(index=False))
    if args.output is not None:
        frame.to_csv(args.output, sep="\t", index=False)


def do_build_vocab(args, cfg, logger):
    pairs, _ = read_clean_corpus(args.src, args.tgt, logger)
    src_vocab = corpus.build_vocabulary([pair.source for pair in pairs], cfg.max_vocab_src)
    tgt_vocab = corpus.build_vocabulary([pair.target for pair in pairs], cfg.max_vocab_tgt)
    src_vocab.save(args.vocab_src)
    tgt_vocab.save(args.vocab_tgt)
    logger.log("Vocabularies: {} source and {} target tokens".format(len(src_vocab), len(tgt_vocab)))


def do_train_coarse(args, cfg, logger):
    pairs, _ = read_clean_corpus(args.src, args.tgt, logger)
    src_vocab, tgt_vocab = corpus.Vocabulary.load(args.vocab_src), corpus.Vocabulary.load(args.vocab_tgt)
    cascade.train_coarse(cfg, pairs, src_vocab, tgt_vocab, checkpoint_path=args.output, metrics_path=args.metrics,
                         init_checkpoint=args.init)


def do_train_fine(args, cfg, logger):
    pairs, _ = read_clean_corpus(args.src, args.tgt, logger)
    cascade.train_fine(cfg, pairs, args.coarse, checkpoint_path=args.output, metrics_path=args.metrics,
                       init_checkpoint=args.init)


def do_translate(args, cfg, logger):
    rules = segmenter.SegmentRuleSet.from_config(cfg)
    sentences = read_sentences(args.input)
    coarse = checkpoint.load_model(args.coarse, cfg.dtype)
    fine = checkpoint.load_model(args.fine, cfg.dtype) if args.fine is not None else None
    if fine is not None:
        cascade.check_cascade(coarse, fine)
    outputs = cascade.translate_corpus(sentences, rules, coarse, fine, max_len=cfg.max_decode_len)
    corpus.write_lines(args.output, [" ".join(tokens) for tokens in outputs])
    logger.log("Translated {} sentences ({}) into {}".format(len(outputs), "coarse + fine" if fine else "coarse",
                                                             args.output))


def do_evaluate(args, cfg, logger):
    hypotheses = [corpus.normalize_line(line).split() for line in corpus.read_lines(args.hyp)]
    reference_sets = [[corpus.normalize_line(line).split() for line in corpus.read_lines(path)]
                      for path in args.ref]
    for path, refs in zip(args.ref, reference_sets):
        if len(refs) != len(hypotheses):
            raise DataError("{} has {} lines but {} has {} lines".format(args.hyp, len(hypotheses), path, len(refs)))
    groups = [corpus.MultiRefGroup(None, [refs[i] for refs in reference_sets]) for i in range(len(hypotheses))]
    references = evaluation.select_references(hypotheses, groups)
    overall = evaluation.corpus_bleu(hypotheses, references)
    long_short, buckets, ppl = None, None, None
    if args.src is not None:
        sources = read_sentences(args.src)
        if len(sources) != len(hypotheses):
            raise DataError("{} has {} lines but {} has {} lines".format(args.hyp, len(hypotheses), args.src,
                                                                        len(sources)))
        lengths = [len(tokens) for tokens in sources]
        long_short = evaluation.long_short_report(hypotheses, references, lengths, cfg.threshold)
        buckets = evaluation.bucket_report(hypotheses, references, lengths)
        if args.model is not None:
            network = checkpoint.load_model(args.model, cfg.dtype)
            examples = [(corpus.numericalize(src, network.spec.src_vocab),
                         corpus.numericalize(ref, network.spec.tgt_vocab))
                        for src, ref in zip(sources, reference_sets[0]) if ref]
            ppl = evaluation.perplexity(network, examples, cfg.batch_size)
    elif args.model is not None:
        raise UsageError("--model needs --src")
    evaluation.write_report(args.output, overall, long_short, buckets, ppl)
    logger.log("BLEU = {:.3f}, report written to {}".format(overall.score, args.output))


COMMANDS = {
    "segment": do_segment,
    "stats": do_stats,
    "build-vocab": do_build_vocab,
    "train-coarse": do_train_coarse,
    "train-fine": do_train_fine,
    "translate": do_translate,
    "evaluate": do_evaluate,
}


def run(argv):
    """
    Parse argv, run the verb and return the exit code

    Args:
        argv (list): arguments without the program name
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        check_paths(args)
        cfg = load_config(args)
        set_seed(cfg.seed)
        logger = TimeLogger(time_logger_step=1, hierachy=1, verbose=cfg.export_verbose)
        COMMANDS[args.verb](args, cfg, logger)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK
    except UsageError as e:
        print("hseq: usage error: {}".format(e), file=sys.stderr)
        if "usage:" not in str(e):
            print(parser.format_usage().strip(), file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print("hseq: data error: {}".format(e), file=sys.stderr)
        return EXIT_DATA
    except (HseqError, ValueError) as e:
        print("hseq: error: {}".format(e), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main():
    get_msg(file=sys.stderr)
    sys.exit(run(sys.argv[1:]))
