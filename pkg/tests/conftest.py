import numpy as np
import pytest
from hypothesis import settings

from holderint import BoxDomain, FieldTuple, ScalarField, lacunary_series

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def coord(axis, dim):
    return ScalarField.coordinate(axis, dim)


def smooth(func, dim, lip, sup=None):
    """Declared Lipschitz field."""
    return ScalarField(func, dim, 1.0, lip, sup)


def random_lacunary(rng, dim, exponent, terms=6, axis=None):
    kind = rng.choice(["cosine_1d", "sine_1d"]) if dim == 1 else rng.choice(
        ["cosine_1d", "sine_1d", "sine_product"])
    ax = int(rng.integers(dim)) if axis is None else axis
    return lacunary_series(exponent, terms, str(kind), dim=dim, axis=ax,
                           phase=float(rng.uniform(0, 2 * np.pi)) if kind != "sine_product" else 0.0,
                           amplitude=float(rng.uniform(0.5, 1.5)))


@pytest.fixture
def unit2():
    return BoxDomain.unit(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def identity(dim):
    return FieldTuple.identity(dim)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
