import dataclasses

import pytest

from jamgame.core_model import BASELINE, MarkovParams


def tweak(params=BASELINE, **changes):
    markov = {k: changes.pop(k) for k in ("alpha", "beta") if k in changes}
    if markov:
        changes["markov"] = dataclasses.replace(params.markov, **markov)
    return dataclasses.replace(params, **changes)


@pytest.fixture
def baseline():
    return BASELINE
