from pathlib import Path

import pytest

from maskron.masking import Keyring

FIXTURES_DIR = Path(__file__).parent / "fixtures"

# Fixed material so runs are reproducible; never use outside tests.
KEY_A = bytes(range(32))
KEY_B = bytes(range(1, 33))
SALT_A = b"\x01" * 16
SALT_B = b"\x02" * 16


@pytest.fixture
def keyring():
    return Keyring(keys={"k1": KEY_A, "k2": KEY_B}, salts={"s1": SALT_A, "s2": SALT_B})


# -- acceptance summary: one PASS/FAIL line per criterion -------------------------

_acceptance: dict[int, tuple[str, bool, float]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number = report.user_properties and dict(report.user_properties).get("criterion")
    if number:
        title = dict(report.user_properties)["title"]
        _acceptance[number] = (title, report.passed, report.duration)


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("acceptance")
    if marker:
        item.user_properties.append(("criterion", marker.args[0]))
        item.user_properties.append(("title", marker.args[1]))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok, duration = _acceptance[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({duration:.2f} s)"
        )
