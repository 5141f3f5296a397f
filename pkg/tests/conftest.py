import pytest

from cd2d import builtin_problem


@pytest.fixture(scope="session")
def ex1():
    return builtin_problem("Example1")


@pytest.fixture(scope="session")
def ex2():
    return builtin_problem("Example2")
