"""Floor-plan description toolkit.

Two learned paragraph generators (an image-cue hierarchical decoder and a
caption-driven attention seq2seq), a deterministic template baseline, and
evaluation for both generated text (BLEU / ROUGE / METEOR) and symbol
detection (AP / mAP).  The numeric core is a small tape-based autodiff
engine over numpy; nothing here needs a deep-learning framework.
"""

__version__ = "0.1.0"
