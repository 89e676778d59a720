"""Semantic change modeling over precomputed usage and gloss embeddings.

The toolkit labels new-period usages of a word with either one of its
old senses or a novel-sense cluster id.  Building blocks: nearest-gloss
disambiguation, agglomerative sense induction, a trainable novel sense
detector, and two composite methods that combine them.  Everything runs
from TSV files; no encoder is bundled.
"""

from .clustering import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
