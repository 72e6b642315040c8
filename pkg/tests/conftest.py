import pytest

from prizeopt.noise import Burr, Gumbel, Normal, Pareto, Uniform

# families with a catalogued closed form for B_r
CLOSED_FORM_FAMILIES = {
    "uniform": Uniform(1.0),
    "gumbel": Gumbel(),
    "pareto": Pareto(),
    "burr": Burr(),
}
ALL_FAMILIES = {**CLOSED_FORM_FAMILIES, "normal": Normal(1.0)}


@pytest.fixture(params=sorted(ALL_FAMILIES))
def family(request):
    return ALL_FAMILIES[request.param]


@pytest.fixture(params=sorted(CLOSED_FORM_FAMILIES))
def closed_family(request):
    return CLOSED_FORM_FAMILIES[request.param]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        status, title = RESULTS[k]
        terminalreporter.write_line(f"CRITERION {k}: {status}  {title}")
