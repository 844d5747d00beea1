import random

import pytest

import bagtag

LABELS = ["O", "G", "T", "L"]


def conll(count, seed, prefix_words=4):
    rng = random.Random(seed)
    lines = []
    for _ in range(count):
        for _ in range(rng.randint(4, 8)):
            label = rng.choice(LABELS)
            lines.append(f"{label.lower()}{rng.randrange(prefix_words)}\t{label}")
        lines.append("")
    return "\n".join(lines) + "\n"


@pytest.fixture
def config():
    return bagtag.Config.parse(
        "[data]\ncolumns = surface,gold\n"
        "[features]\ntemplates = word,suffix,word-window\nwindow = 1\n"
        "[trainer]\nmax_epochs = 10\n"
    )


@pytest.fixture
def corpora(config):
    train = bagtag.Corpus.parse(conll(30, 1), config)
    test = bagtag.Corpus.parse(conll(10, 2), config, like=train)
    return train, test
