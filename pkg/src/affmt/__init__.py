"""affmt: multi-task facial affect pipeline.

Per-frame annotation management (valence-arousal, 8 action units, 7 basic
expressions), a semi-supervised GAN whose discriminator jointly regresses
VA and detects AUs, and a CNN-RNN-attention network jointly predicting VA
and basic expressions, plus the annotation service that produces the data.
"""

__version__ = "0.1.0"
