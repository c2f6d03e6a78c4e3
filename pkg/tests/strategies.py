"""Hypothesis strategies for valid moment sequences."""
from fractions import Fraction

import mpmath
from hypothesis import strategies as st
from mpmath import mpf


@st.composite
def discrete_measures(draw, min_points=4, max_points=8):
    """Distinct rational nodes with positive rational weights."""
    nodes = draw(st.lists(st.integers(-40, 40), min_size=min_points, max_size=max_points, unique=True))
    weights = draw(st.lists(st.integers(1, 50), min_size=len(nodes), max_size=len(nodes)))
    return [(Fraction(x, 10), Fraction(w, 10)) for x, w in zip(nodes, weights)]


def exact_moments(measure, count):
    return [sum(w * x ** k for x, w in measure) for k in range(count)]


def as_mpf(values):
    return [mpf(v.numerator) / v.denominator for v in values]


@st.composite
def symmetric_circle_measures(draw, min_pairs=3, max_pairs=6):
    """Point masses at e^{+-i theta_j} with equal weights: real, even Toeplitz moments."""
    # well separated angles keep the Toeplitz matrices away from singularity
    angles = draw(st.lists(st.integers(1, 14), min_size=min_pairs, max_size=max_pairs, unique=True))
    weights = draw(st.lists(st.integers(1, 20), min_size=len(angles), max_size=len(angles)))
    return [(mpf(7 * a) / 100 * mpmath.pi, mpf(w)) for a, w in zip(angles, weights)]


def circle_moments(measure, count):
    return [mpmath.fsum(2 * w * mpmath.cos(k * th) for th, w in measure) for k in range(count)]
