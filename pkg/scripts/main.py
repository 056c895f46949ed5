"""
This is the main script running one hseq command: segment, stats, build-vocab,
train-coarse, train-fine, translate or evaluate
"""
import sys
import hseq


if __name__ == '__main__':
    hseq.get_msg(file=sys.stderr)
    sys.exit(hseq.cli.run(sys.argv[1:]))
