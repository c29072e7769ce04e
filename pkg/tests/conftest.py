import pytest

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=["python", "cython"])
def kernel_module(request):
    if request.param == "python":
        from crowdship import _pykernels

        return _pykernels
    try:
        from crowdship import _ckernels
    except ImportError:
        pytest.skip("compiled kernels not built")
    return _ckernels
