"""Exact random behaviours for the LP tests."""
import itertools
from fractions import Fraction

import numpy as np

from hidden_influence.correlations import BehaviorTable, pr_box, product_table, uniform_table

STRATS = list(itertools.product(range(2), repeat=2))


def random_weights(rng, k, den=97):
    raw = [int(v) + 1 for v in rng.integers(0, den, k)]
    tot = sum(raw)
    return [Fraction(r, tot) for r in raw]


def local_model(rng, components=4):
    """Mixture of deterministic four-party strategies with rational weights."""
    probs = np.full((2,) * 8, Fraction(0), dtype=object)
    for wgt in random_weights(rng, components):
        sa, sb, sc, sd = (STRATS[int(i)] for i in rng.integers(0, 4, 4))
        for x, y, z, w in itertools.product(range(2), repeat=4):
            probs[sa[x], sb[y], sc[z], sd[w], x, y, z, w] += wgt
    return BehaviorTable(probs, ("A", "B", "C", "D"))


def pr_variant(alpha, beta, gamma, vis=Fraction(1)):
    """b XOR c = y z + alpha y + beta z + gamma, mixed with white noise."""
    probs = np.full((2,) * 4, Fraction(0), dtype=object)
    for b, c, y, z in itertools.product(range(2), repeat=4):
        hit = (b ^ c) == ((y & z) ^ (alpha & y) ^ (beta & z) ^ gamma)
        probs[b, c, y, z] = vis * Fraction(1, 2) * hit + (1 - vis) * Fraction(1, 4)
    return probs


def block_pr_model(rng):
    """P(ad|xw) local and independent of the B-C block, which is a noisy PR box.

    Visibility stays above 1/2, so every block violates CHSH.
    """
    ad = np.full((2, 2, 2, 2), Fraction(0), dtype=object)
    for wgt in random_weights(rng, 3):
        sa, sd = STRATS[int(rng.integers(4))], STRATS[int(rng.integers(4))]
        for x, w in itertools.product(range(2), repeat=2):
            ad[sa[x], sd[w], x, w] += wgt
    vis = Fraction(int(rng.integers(51, 101)), 100)
    bc = pr_variant(*(int(v) for v in rng.integers(0, 2, 3)), vis)
    probs = np.full((2,) * 8, Fraction(0), dtype=object)
    for a, b, c, d, x, y, z, w in itertools.product(range(2), repeat=8):
        probs[a, b, c, d, x, y, z, w] = ad[a, d, x, w] * bc[b, c, y, z]
    return BehaviorTable(probs, ("A", "B", "C", "D"))


def conditional_blocks(P):
    """The B-C table conditioned on each (a, d, x, w) with nonzero weight."""
    T = P.reorder(("A", "B", "C", "D")).probs
    out = {}
    for a, d, x, w in itertools.product(range(2), repeat=4):
        blk = T[a, :, :, d, x, :, :, w]
        norm = blk[:, :, 0, 0].sum()
        if norm == 0:
            continue
        out[a, d, x, w] = BehaviorTable(blk / norm, ("B", "C"))
    return out


def abd_acd(P):
    T = P.reorder(("A", "B", "C", "D")).probs
    abd = T.sum(axis=2)[:, :, :, :, :, 0, :]
    acd = T.sum(axis=1)[:, :, :, :, 0, :, :]
    return BehaviorTable(abd, ("A", "B", "D")), BehaviorTable(acd, ("A", "C", "D"))


def monogamy_pair():
    """A-B and A-C both PR-correlated: no no-signalling extension exists."""
    ud = uniform_table(1, parties=("D",))
    abd = product_table([pr_box(("A", "B")), ud])
    acd = product_table([pr_box(("A", "C")), ud])
    return abd, acd
