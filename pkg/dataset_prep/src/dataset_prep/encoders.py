"""Image and text encoders producing unit-norm vectors of a shared
dimension.

The default "hash" encoder pair needs no model weights: images map to
downsampled pixel statistics, texts to hashed character n-grams. Both are
fully deterministic, which is what the format round-trip and integration
tests rely on. A CLIP-backed pair (via sentence-transformers) can be
selected when weights are available locally.
"""
from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        # constant inputs (e.g. a solid-color image) get a fixed direction
        v = np.zeros_like(v)
        v[0] = 1.0
        return v
    return v / n


class HashImageEncoder:
    """Downsampled grayscale pixel features; dim must be a square number
    times 1 (the image is resized to sqrt(dim) x sqrt(dim))."""

    def __init__(self, dim: int = 64):
        side = int(round(dim ** 0.5))
        if side * side != dim:
            raise ValueError(f"hash image encoder needs a square dim, got {dim}")
        self.dim = dim
        self._side = side

    def encode(self, path) -> np.ndarray:
        with Image.open(path) as img:
            small = img.convert("L").resize(
                (self._side, self._side), resample=Image.BILINEAR
            )
        pixels = np.asarray(small, dtype=np.float64).ravel()
        return _unit(pixels - pixels.mean())


class HashTextEncoder:
    """Signed character-trigram hashing into `dim` buckets. Uses md5 so
    bucket assignment is stable across processes and platforms."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def encode(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        padded = f"  {text.lower()}  "
        for i in range(len(padded) - 2):
            gram = padded[i : i + 3].encode("utf-8")
            digest = hashlib.md5(gram).digest()
            bucket = int.from_bytes(digest[:4], "little") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            v[bucket] += sign
        return _unit(v)


class ClipEncoderPair:
    """CLIP dual encoder via sentence-transformers; requires downloaded
    weights, so it is opt-in and untested in offline environments."""

    def __init__(self, model_name: str = "clip-ViT-B-32"):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_name)
        self.dim = self._model.get_sentence_embedding_dimension()

    def encode_image(self, path) -> np.ndarray:
        with Image.open(path) as img:
            vec = self._model.encode(img.convert("RGB"))
        return _unit(np.asarray(vec, dtype=np.float64))

    def encode_text(self, text: str) -> np.ndarray:
        vec = self._model.encode(text)
        return _unit(np.asarray(vec, dtype=np.float64))


def make_encoders(encoder_name: str, dim: int = 64):
    """Returns (image_encoder, text_encoder) with .encode methods."""
    if encoder_name == "hash":
        return HashImageEncoder(dim), HashTextEncoder(dim)
    if encoder_name.startswith("clip"):
        pair = ClipEncoderPair() if encoder_name == "clip" else ClipEncoderPair(encoder_name)

        class _Img:
            dim = pair.dim
            encode = staticmethod(pair.encode_image)

        class _Txt:
            dim = pair.dim
            encode = staticmethod(pair.encode_text)

        return _Img(), _Txt()
    raise ValueError(f"unknown encoder {encoder_name!r}")
