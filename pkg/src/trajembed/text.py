"""Bag-of-words featurization of natural-language instructions."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    """An ordered, duplicate-free list of lowercase terms.

    Built from training-fold text only so held-out folds cannot leak terms.
    """

    terms: tuple[str, ...]
    index: dict[str, int]

    @staticmethod
    def build(texts) -> "Vocabulary":
        terms = sorted({token for text in texts for token in tokenize(text)})
        return Vocabulary(terms=tuple(terms), index={t: i for i, t in enumerate(terms)})

    def __len__(self) -> int:
        return len(self.terms)


def bag_of_words(text: str, vocab: Vocabulary) -> np.ndarray:
    """Count in-vocabulary term occurrences; unknown terms are dropped.

    Empty text yields the zero vector. Entirely out-of-vocabulary text also
    yields the zero vector but logs a warning, since it usually means the
    vocabulary was built from the wrong fold.
    """
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    counts = np.zeros(len(vocab), dtype=np.float64)
    tokens = tokenize(text)
    hit = False
    for token in tokens:
        idx = vocab.index.get(token)
        if idx is not None:
            counts[idx] += 1.0
            hit = True
    if tokens and not hit:
        log.warning("text %r is entirely out of vocabulary", text)
    return counts


class BagOfWordsEncoder(BaseEstimator, TransformerMixin):
    """Sklearn-style encoder mapping raw strings to term-count rows.

    fit() builds the vocabulary from the given texts; transform() maps a
    sequence of strings to an (n_texts, vocabulary size) count matrix.
    """

    def fit(self, X, y=None):
        self.vocabulary_ = Vocabulary.build(X)
        return self

    def transform(self, X):
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("BagOfWordsEncoder must be fitted before transform")
        return np.stack([bag_of_words(text, self.vocabulary_) for text in X])
