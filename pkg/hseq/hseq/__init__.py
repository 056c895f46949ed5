"""
Import all necessary modules
"""

import tensorflow
from hseq.config import Config
from hseq import utils, config, corpus, segmenter, kernel, encoder, decoder, model, checkpoint, train, cascade
from hseq import evaluation, cli
from hseq.version import __version__, VERSION, get_msg
