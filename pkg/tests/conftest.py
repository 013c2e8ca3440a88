"""Shared strategies and builders."""
from fractions import Fraction as F

from hypothesis import strategies as st

from coboundary.rational import HybridFunction, IntervalSet, SampledFunction, StepFunction


def step(*pieces):
    """``step((0, "1/2", 1), ...)`` with string or int endpoints."""
    return StepFunction([(F(lo), F(hi), F(v)) for lo, hi, v in pieces])


def unit():
    return IntervalSet.unit()


def sampled_affine(lo, hi, slope, intercept, steps):
    """Samples of ``slope·t + intercept`` on an equispaced grid."""
    slope, intercept = F(slope), F(intercept)
    return SampledFunction.from_callable(lambda t: slope * t + intercept, F(lo), F(hi), steps, abs(slope))


def hybrid_affine(slope, intercept, steps=64):
    sp = sampled_affine(0, 1, slope, intercept, steps)
    return HybridFunction(step((0, 1, 0)), sp)


rationals = st.fractions(min_value=-3, max_value=3, max_denominator=12)


@st.composite
def mean_zero_steps(draw, max_pieces=8, max_den=24):
    """Random mean-zero step function on [0, 1) with at least two pieces."""
    n = draw(st.integers(2, max_pieces))
    cuts = sorted(set(draw(st.lists(st.fractions(F(1, max_den), F(max_den - 1, max_den), max_denominator=max_den),
                                    min_size=n - 1, max_size=n - 1))))
    brk = [F(0)] + cuts + [F(1)]
    vals = [draw(rationals) for _ in range(len(brk) - 2)]
    mass = sum(v * (b - a) for v, a, b in zip(vals, brk, brk[1:]))
    last = -mass / (brk[-1] - brk[-2])
    return StepFunction.from_breaks(brk, vals + [last])


@st.composite
def interval_sets(draw, max_pieces=4, max_den=16):
    pts = sorted(set(draw(st.lists(st.fractions(0, 1, max_denominator=max_den), min_size=2, max_size=2 * max_pieces))))
    pairs = [(pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2)]
    return IntervalSet.of(*pairs)


def random_step_on(rng, K, max_cuts=4, max_den=64, value_range=4):
    """Mean-zero step function on the interval union ``K`` (random, via ``rng``)."""
    pieces = []
    for iv in K:
        cuts = sorted({iv.lo + iv.length * F(rng.randint(1, max_den - 1), max_den) for _ in range(rng.randint(0, max_cuts))})
        brk = [iv.lo] + cuts + [iv.hi]
        for a, b in zip(brk, brk[1:]):
            pieces.append([a, b, F(rng.randint(-value_range * 4, value_range * 4), 4)])
    mass = sum((b - a) * v for a, b, v in pieces)
    pieces[-1][2] -= mass / (pieces[-1][1] - pieces[-1][0])
    return StepFunction([tuple(p) for p in pieces])


def random_interval_set(rng, max_pieces=4, max_den=32):
    k = rng.randint(1, max_pieces)
    pts = sorted(rng.sample(range(max_den + 1), 2 * k))
    return IntervalSet.of(*[(F(pts[2 * i], max_den), F(pts[2 * i + 1], max_den)) for i in range(k)])


def atom_plus_ramp(steps=64):
    """``1/4`` on ``[0, 1/3)`` and the ramp ``3/2·t − 9/8`` sampled on ``[1/3, 1)``."""
    sp = sampled_affine(F(1, 3), 1, F(3, 2), F(-9, 8), steps)
    return HybridFunction(step((0, "1/3", "1/4"), ("1/3", 1, 0)), sp)
