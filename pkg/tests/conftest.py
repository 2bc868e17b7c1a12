import numpy as np
import pytest
from hypothesis import strategies as st

from orbital_beta.core import OrderedTuple


@pytest.fixture
def announce(capsys):
    """Print one acceptance line straight to the terminal, bypassing capture."""
    def _announce(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
    return _announce


@st.composite
def labels(draw, min_size=2, max_size=6):
    """Strictly decreasing labels with gaps bounded away from zero."""
    n = draw(st.integers(min_size, max_size))
    start = draw(st.floats(-3, 3))
    gaps = draw(st.lists(st.floats(0.05, 2.0), min_size=n - 1, max_size=n - 1))
    return OrderedTuple(start - np.concatenate([[0.0], np.cumsum(gaps)]))
