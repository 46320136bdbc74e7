import random

import pytest

from stencilplan.model import CharacterCandidate, Instance


def make_candidate(cid, pw=10, ph=10, sl=2, sr=2, st=0, sb=0, n=5, t=(1,)):
    return CharacterCandidate(id=cid, pw=pw, ph=ph, sl=sl, sr=sr, st=st, sb=sb,
                              n=n, t=tuple(t))


def random_instance_1d(rng: random.Random, n=8, regions=2, width=160, rows=2,
                       row_height=40, usage_max=50):
    """Small 1d instance with asymmetric blanks for oracle-scale tests."""
    cands = []
    for cid in range(n):
        sl, sr = rng.randint(0, 8), rng.randint(0, 8)
        pw = rng.randint(8, 30)
        cands.append(CharacterCandidate(
            id=cid, pw=pw, ph=rng.randint(10, row_height), sl=sl, sr=sr, st=0, sb=0,
            n=rng.randint(2, 20),
            t=tuple(rng.randint(0, usage_max) for _ in range(regions))))
    return Instance(candidates=cands, width=width, height=rows * row_height,
                    mode="1d", regions=regions, rows=rows, row_height=row_height)


def random_instance_2d(rng: random.Random, n=8, regions=2, width=200, height=200,
                       usage_max=50):
    cands = []
    for cid in range(n):
        sl, sr = rng.randint(1, 8), rng.randint(1, 8)
        st, sb = rng.randint(1, 8), rng.randint(1, 8)
        cands.append(CharacterCandidate(
            id=cid, pw=rng.randint(8, 30), ph=rng.randint(8, 30),
            sl=sl, sr=sr, st=st, sb=sb, n=rng.randint(2, 20),
            t=tuple(rng.randint(0, usage_max) for _ in range(regions))))
    return Instance(candidates=cands, width=width, height=height, mode="2d",
                    regions=regions)


@pytest.fixture
def rng():
    return random.Random(20240817)
