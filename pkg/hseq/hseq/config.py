"""
This module defines the reader for the run configuration file
"""

import json


SCHEDULE_PRESETS = {
    # decay start, decay interval, training steps
    "proposed": (15000, 1500, 20000),
    "online": (120000, 10000, 150000),
}


def read_config_file(config_file):
    """read a json file or a plain-text key=value file into a dict"""
    with open(config_file, "r", encoding="utf-8") as f:
        content = f.read()
    if config_file.endswith(".json"):
        return json.loads(content)
    config_dict = {}
    for i, line in enumerate(content.splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        assert "=" in line, "{} line {}: expected key=value, got '{}'".format(config_file, i + 1, line)
        key, value = [part.strip() for part in line.split("=", 1)]
        try:
            config_dict[key] = json.loads(value)
        except ValueError:
            config_dict[key] = value
    return config_dict


class Config(object):
    """
    An object reading in a run configuration (json or key=value text)

    ### Output files
    experiment_id (str): A string used to tag outputs (default: "Debugging").
    export_verbose (int): print verbose, supported [0: silent, 1: stage messages (default),
                                                    2: one line per logged training step]

    ### Segmentation (See segmenter.py for more details)
    threshold (int): sentences with more tokens than this are long and get segmented (default: 50).
    fallback_target_len (int): segment length used when splitting by number of words (default: 30).
    segment_method (str): ["delimiter" (default), "count"]; "count" splits long sentences by number of words only.
    delimiters_file (str): optional plain-text file listing delimiters, one per line, replacing the defaults.

    ### Vocabularies
    max_vocab_src (int): source vocabulary cap including reserved tokens (default: 50000).
    max_vocab_tgt (int): target vocabulary cap including reserved tokens (default: 50000).

    ### Network (See encoder.py and decoder.py for more details)
    embed_dim (int): word embedding dimension (default: 128).
    hidden_dim (int): LSTM hidden units (default: 128).
    encoder_layers, decoder_layers (int): default 4 for the coarse network, 3 for the fine network.
    bidirectional_first (bool): bidirectional first encoder layer, default True (coarse) / False (fine).
    residual_layers (list): 0-based encoder layers with a skip connection, default the last two (coarse)
                            / none (fine).
    max_src_len (int): longest source sequence fed to an encoder (default: 400).
    max_decode_len (int): greedy decoding cap (default: 100).
    dtype (str): ["float32" (default), "float64"].
    init_scale (float): parameters initialized uniformly in [-init_scale, init_scale] (default: 0.08).

    ### Training procedure
    seed (int): seed for initialization and batch shuffling (default: 1000).
    batch_size (int): sentences per batch (default: 256).
    schedule_preset (str): ["proposed" (default), "online"], fills the three keys below.
    max_steps (int): training steps.
    decay_start_step (int), decay_interval (int): staircase decay of the learning rate.
    lr_val (float): initial SGD learning rate (default: 1.0).
    decay_factor (float): default 0.1.
    min_lr (float): learning rate floor (default: 0.0001).
    clip_norm (float): global gradient norm cap (default: 5.0).
    n_iter_log (int): print every n steps (default: 100).
    n_iter_eval (int): evaluate the dev set every n steps when a dev set is given (default: 500).
    keep_best (bool): keep the parameters with the lowest dev loss (default: False).
    """

    def __init__(self, config_file=None, **overrides):

        config_dict = read_config_file(config_file) if config_file is not None else {}
        config_dict.update({key: val for key, val in overrides.items() if val is not None})

        self.experiment_id = config_dict["experiment_id"] if "experiment_id" in config_dict else "Debugging"
        self.export_verbose = config_dict["export_verbose"] if "export_verbose" in config_dict else 1

        self.threshold = config_dict["threshold"] if "threshold" in config_dict else 50
        self.fallback_target_len = config_dict["fallback_target_len"] if "fallback_target_len" in config_dict \
            else 30
        self.segment_method = config_dict["segment_method"] if "segment_method" in config_dict else "delimiter"
        assert self.segment_method in ["delimiter", "count"], NotImplementedError
        self.delimiters_file = config_dict["delimiters_file"] if "delimiters_file" in config_dict else None
        self.max_vocab_src = config_dict["max_vocab_src"] if "max_vocab_src" in config_dict else 50000
        self.max_vocab_tgt = config_dict["max_vocab_tgt"] if "max_vocab_tgt" in config_dict else 50000

        self.embed_dim = config_dict["embed_dim"] if "embed_dim" in config_dict else 128
        self.hidden_dim = config_dict["hidden_dim"] if "hidden_dim" in config_dict else 128
        self.max_src_len = config_dict["max_src_len"] if "max_src_len" in config_dict else 400
        self.max_decode_len = config_dict["max_decode_len"] if "max_decode_len" in config_dict else 100
        self.dtype = config_dict["dtype"] if "dtype" in config_dict else "float32"
        assert self.dtype in ["float32", "float64"], NotImplementedError
        self.init_scale = config_dict["init_scale"] if "init_scale" in config_dict else 0.08

        self.seed = config_dict["seed"] if "seed" in config_dict else 1000
        self.batch_size = config_dict["batch_size"] if "batch_size" in config_dict else 256
        self.schedule_preset = config_dict["schedule_preset"] if "schedule_preset" in config_dict else "proposed"
        assert self.schedule_preset in SCHEDULE_PRESETS, NotImplementedError
        decay_start, decay_interval, n_steps = SCHEDULE_PRESETS[self.schedule_preset]
        self.max_steps = config_dict["max_steps"] if "max_steps" in config_dict else n_steps
        self.decay_start_step = config_dict["decay_start_step"] if "decay_start_step" in config_dict \
            else decay_start
        self.decay_interval = config_dict["decay_interval"] if "decay_interval" in config_dict else decay_interval
        self.lr_val = config_dict["lr_val"] if "lr_val" in config_dict else 1.0
        self.decay_factor = config_dict["decay_factor"] if "decay_factor" in config_dict else 0.1
        self.min_lr = config_dict["min_lr"] if "min_lr" in config_dict else 0.0001
        self.clip_norm = config_dict["clip_norm"] if "clip_norm" in config_dict else 5.0
        self.n_iter_log = config_dict["n_iter_log"] if "n_iter_log" in config_dict else 100
        self.n_iter_eval = config_dict["n_iter_eval"] if "n_iter_eval" in config_dict else 500
        self.keep_best = config_dict["keep_best"] if "keep_best" in config_dict else False

        assert self.batch_size >= 1, "batch_size has to be positive"
        assert self.max_steps >= 0, "max_steps cannot be negative"
        assert self.threshold > 1, "threshold has to be larger than 1"

        self.__dict__.update(config_dict)

    def network(self, role):
        """layer settings of the coarse or the fine network, explicit keys win over role defaults"""
        assert role in ["coarse", "fine"], NotImplementedError
        n_layers = 4 if role == "coarse" else 3
        encoder_layers = getattr(self, "encoder_layers", n_layers)
        defaults = {
            "encoder_layers": encoder_layers,
            "decoder_layers": getattr(self, "decoder_layers", n_layers),
            "bidirectional_first": getattr(self, "bidirectional_first", role == "coarse"),
            "residual_layers": getattr(self, "residual_layers",
                                       list(range(max(encoder_layers - 2, 1), encoder_layers))
                                       if role == "coarse" else []),
        }
        return defaults
