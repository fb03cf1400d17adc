from fractions import Fraction

import pytest

from lindyn import shifts


@pytest.fixture(scope="session")
def pair():
    """The counterexample weights at the acceptance scale, built once."""
    return shifts.counterexample_pair(8, Fraction(1, 8), None, 3, 10**6)
