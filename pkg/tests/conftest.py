import numpy as np
import pytest

from thermokc.bitcore import BitString


def bits(text: str) -> BitString:
    return BitString.from_str(text)


def random_bits(rng: np.random.Generator, n: int) -> BitString:
    return BitString.from_array(rng.integers(0, 2, n, dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(RESULTS.items(), key=lambda kv: int(kv[0].split()[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
