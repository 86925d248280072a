"""Shannon entropy of a string's character distribution."""

import math
from collections import Counter


def shannon_entropy(s: str) -> float:
    """Entropy in bits per character: -sum((n_c/N) * log2(n_c/N)).

    An empty string and a single repeated symbol both score 0.0. The result
    is bounded above by log2(len(s)) (all characters distinct).
    """
    n = len(s)
    if n == 0:
        return 0.0
    h = 0.0
    for count in Counter(s).values():
        p = count / n
        h -= p * math.log2(p)
    return h
