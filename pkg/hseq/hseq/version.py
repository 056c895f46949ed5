"""
This module defines the version of the package
"""

import sys

__version__ = '0.4.0'
VERSION = __version__


def get_msg(file=None):
    """get version history"""
    file = sys.stdout if file is None else file
    changelog = [
        """
        version 0.1.0
        -- Mar 2, 2024 --
        * Single attention seq2seq network trained with SGD
        * Tab-separated metrics log
        """,

        """
        version 0.2.0
        -- Mar 19, 2024 --
        * Rule-based segmentation of long sentences
        * Fallback split by number of words
        * Coarse training set from aligned segments
        """,

        """
        version 0.2.1
        -- Apr 3, 2024 --
        * Source embeddings added to the attention memory
        * Residual connections on the upper encoder layers
        """,

        """
        version 0.3.0
        -- Apr 29, 2024 --
        * Fine network re-decoding the concatenated coarse output
        * Fine-tuning from a pretrained checkpoint
        * Checkpoint description next to every checkpoint
        """,

        """
        version 0.3.1
        -- May 14, 2024 --
        * Multi-reference BLEU selection
        * Long/short and length-bucket reports
        """,

        """
        version 0.4.0
        -- June 10, 2024 --
        * Move to TensorFlow 2 eager execution
        * Command line with exit codes
        * Schedule presets for the in-domain and the online corpus
        """
    ]
    print(
        "=" * 80 + '\n'
        "  _                       \n"
        " | |__  ___  ___  __ _    \n"
        " | '_ \\/ __|/ _ \\/ _` |   \n"
        " | | | \\__ \\  __/ (_| |   \n"
        " |_| |_|___/\\___|\\__, |   \n"
        "                    |_|   \n"
        "Hierarchical coarse-to-fine sequence-to-sequence translation, version {}".format(__version__),
        file=file
    )
    print(changelog[-1], file=file)
    print(
        "Usage: hseq <verb> --help lists the options of every verb.\n"
        "To report a bug, please use the 'Issues' function of the repository.\n",
        "-" * 80,
        file=file
    )
