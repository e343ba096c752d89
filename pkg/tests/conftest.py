import io
import random

import pytest

from objlog.runtime import Runtime


@pytest.fixture
def rt():
    """A fresh runtime whose output is captured."""
    return Runtime(out=io.StringIO())


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def captured(rt) -> str:
    return rt.out.getvalue()
