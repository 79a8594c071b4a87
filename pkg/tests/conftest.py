import pytest

from stopcontest import ContestSpec, solve_past_regret


@pytest.fixture(scope="session")
def past2():
    """Solved past-regret equilibrium for n=2, x0=1, K=1."""
    return solve_past_regret(ContestSpec(n=2, x0=1.0, K=1.0, mode="past"))


@pytest.fixture(scope="session")
def past3():
    """Solved past-regret equilibrium for n=3, x0=1, K=1."""
    return solve_past_regret(ContestSpec(n=3, x0=1.0, K=1.0, mode="past"))
