"""Cognitive THz nano-receiver toolkit.

Statistical signal processing for a hybrid pulse/carrier THz link:
channel synthesis, modulation-mode detection with closed-form error
probabilities, least-squares channel estimation and deconvolution,
GMM+EM modulation classification via symmetric KL divergence, and
Markov-chain modulation prediction.
"""

from . import channel, classify, detector, equalize, predict, signals, specfun, waveform
from .signals import SampledSignal, convolve

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SampledSignal",
    "convolve",
    "channel",
    "classify",
    "detector",
    "equalize",
    "predict",
    "signals",
    "specfun",
    "waveform",
]
