from __future__ import annotations

import time
from importlib import resources

import pytest

from stringnet.core import ScenarioConfig
from stringnet.engine import World

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    def record(name: str, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE.append((name, bool(ok), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())


def bundled(name: str) -> ScenarioConfig:
    text = (resources.files("stringnet") / "scenarios" / name).read_text(encoding="utf-8")
    return ScenarioConfig.loads(text)


@pytest.fixture(scope="session")
def s18_run():
    """The bundled 18v18 scenario run once per session with full logging."""
    cfg = bundled("s18.json")
    t0 = time.perf_counter()
    world = World(cfg)
    status = world.run()
    return world, status, time.perf_counter() - t0


@pytest.fixture(scope="session")
def single_run():
    world = World(bundled("single.json"))
    return world, world.run()
