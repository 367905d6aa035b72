import pytest

from sindykit import LibrarySpec, SystemSpec, simulate

LORENZ_PARAMS = {"sigma": 10.0, "beta": 8.0 / 3.0, "rho": 28.0}
LORENZ_TRUE_SUPPORT = {
    ("x", 0), ("y", 0),
    ("x", 1), ("y", 1), ("xz", 1),
    ("z", 2), ("xy", 2),
}
LORENZ_TRUE_VALUES = [
    ("x", 0, -10.0), ("y", 0, 10.0),
    ("x", 1, 28.0), ("y", 1, -1.0), ("xz", 1, -1.0),
    ("z", 2, -8.0 / 3.0), ("xy", 2, 1.0),
]


@pytest.fixture(scope="session")
def lorenz_dataset():
    """Chaotic reference trajectory: t in [0, 100], dt = 0.001, exact
    derivatives from the analytic right-hand side."""
    spec = SystemSpec(
        "lorenz", x0=(-8.0, 7.0, 27.0), t_span=(0.0, 100.0), dt=0.001,
        params=LORENZ_PARAMS)
    return simulate(spec)


@pytest.fixture(scope="session")
def lorenz_library():
    return LibrarySpec(n_states=3, poly_order=5)


@pytest.fixture(scope="session")
def linear2d_dataset():
    spec = SystemSpec("linear2d", x0=(2.0, 0.0), t_span=(0.0, 25.0), dt=0.01)
    return simulate(spec)


def coefficient(model, term_name: str, equation: int) -> float:
    names = [t.name(model.state_names) for t in model.terms]
    return float(model.coefficients[names.index(term_name), equation])


def max_relative_error(model, expected) -> float:
    return max(
        abs((coefficient(model, nm, eq) - truth) / truth)
        for nm, eq, truth in expected
    )
