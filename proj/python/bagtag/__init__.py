"""Bagged featurized-HMM sequence labeling with active learning."""

from ._bagtag import (
    BagtagError,
    Config,
    Corpus,
    Session,
    Tagger,
    al_simulate,
)

__all__ = ["BagtagError", "Config", "Corpus", "Session", "Tagger", "al_simulate"]
