import pytest

from cycleweights.weights import (
    Ewens,
    FiniteSupport,
    NegPower,
    PerturbedEwens,
    Perturbation,
    PowerAlpha,
)

# the family matrix used by oracle, symmetry and sampler checks
MATRIX = {
    "ewens0.5": Ewens(0.5),
    "ewens1": Ewens(1.0),
    "ewens2": Ewens(2.0),
    "perturbed2": PerturbedEwens(2.0, Perturbation("geometric", 1.0, 0.5)),
    "power0.5": PowerAlpha(0.5),
    "power2": PowerAlpha(2.0),
    "negpower2": NegPower(2.0),
    "finite45": FiniteSupport({4: 1, 5: 1}),
}


@pytest.fixture(params=sorted(MATRIX), ids=sorted(MATRIX))
def family(request):
    return MATRIX[request.param]


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(label, ok, detail=""):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
