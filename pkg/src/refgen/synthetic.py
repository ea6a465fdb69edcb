"""Small synthetic datasets that a correct model can memorise quickly.

They back the overfitting checks: a generator should reproduce its
training targets token for token, and a resolver should separate targets
whose utterance vectors are noisy copies of the target's features.
"""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingCache
from .resolver import ResolutionInstance
from .textprep import EncodedInstance, Vocabulary, encode_instance

_WORDS = ("the guy with camera dog red blue cake bowl rice girl kite beach man woman pizza "
          "white black small big on in near a one same again").split()
_RARE = ("zebra", "tuba", "yacht", "igloo")


def generation_set(n: int = 50, feature_dim: int = 32, n_images: int = 12,
                   seed: int = 0) -> tuple[list[EncodedInstance], dict[str, np.ndarray], Vocabulary]:
    """``n`` instances whose target text is a fixed function of the target image.

    Every other instance has a previous mention equal to the target text.
    A third of the images are described with an out-of-vocabulary word, so
    the copy path is exercised whenever such a description is repeated.
    """
    rng = np.random.default_rng(seed)
    images = [f"syn_{i}" for i in range(n_images)]
    features = {img: rng.random(feature_dim).astype(np.float32) for img in images}
    vocab = Vocabulary(_WORDS)
    descriptions = {}
    for i, img in enumerate(images):
        words = list(rng.choice(_WORDS, size=int(rng.integers(2, 5)), replace=False))
        if i % 3 == 0:
            words.insert(int(rng.integers(len(words) + 1)), _RARE[i % len(_RARE)])
        descriptions[img] = words
    out = []
    for k in range(n):
        context = list(rng.choice(images, size=6, replace=False))
        pos = int(rng.integers(6))
        target = descriptions[context[pos]]
        prev = target if k % 2 else None
        out.append(encode_instance(prev, target, vocab, context, pos, chain_position=1 if prev is None else 2))
    return out, features, vocab


def separable_resolution_set(n: int = 30, dim: int = 16, n_images: int = 12, noise: float = 0.05,
                             seed: int = 0) -> tuple[list[ResolutionInstance], EmbeddingCache, dict[str, np.ndarray]]:
    """Utterance token vectors are noisy copies of the target's feature vector."""
    rng = np.random.default_rng(seed)
    images = [f"res_{i}" for i in range(n_images)]
    features = {img: rng.standard_normal(dim).astype(np.float32) for img in images}
    cache = EmbeddingCache()
    out = []
    for k in range(n):
        context = list(rng.choice(images, size=6, replace=False))
        pos = int(rng.integers(6))
        length = int(rng.integers(1, 5))
        vecs = features[context[pos]][None, :] + noise * rng.standard_normal((length, dim))
        key = f"utt_{k}"
        cache.put(key, vecs.astype(np.float32))
        out.append(ResolutionInstance(key, context, pos, [None] * 6, message_id=k))
    return out, cache, features
