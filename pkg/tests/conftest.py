import sys
from pathlib import Path

# test helpers live beside the tests
sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[str, str] = {}
_order: list[str] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): named acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker:
            name = marker.args[0]
            _criteria[item.nodeid] = name
            if name not in _order:
                _order.append(name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    outcomes: dict[str, str] = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", None)
            if nodeid in _criteria and getattr(rep, "when", "call") == "call":
                name = _criteria[nodeid]
                bad = status in ("failed", "error")
                if bad or outcomes.get(name) != "FAIL":
                    outcomes[name] = "FAIL" if bad else "PASS"
    if outcomes:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name in _order:
            if name in outcomes:
                terminalreporter.write_line(f"{outcomes[name]}: {name}")
