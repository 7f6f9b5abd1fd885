import numpy as np
import pytest

from ldsaud.signatures import SignatureMatrix


@pytest.fixture(scope="session")
def matrix_5x6():
    """Balanced 5x6 weight-2 matrix: odd row count gives a valid ZC length."""
    entries = np.array(
        [
            [1, 1, 0, 0, 1, 0],
            [1, 0, 1, 0, 0, 1],
            [0, 1, 1, 0, 0, 0],
            [0, 0, 0, 1, 1, 0],
            [0, 0, 0, 1, 0, 1],
        ],
        dtype=np.uint8,
    )
    return SignatureMatrix(entries, 5, 6, 2)
