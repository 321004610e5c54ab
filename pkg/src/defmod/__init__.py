"""Definition generation toolkit.

Trains single-sense and multi-sense word embeddings, matches sense vectors
to reference definitions, trains sense-conditioned LSTM definition
generators, and evaluates them with BLEU, rBLEU, and fBLEU.
"""

__version__ = "0.1.0"
