"""Pytest hooks: collect acceptance-criterion outcomes and print one line each."""

from __future__ import annotations

import re

_ACCEPTANCE_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")

_CRITERIA = {
    1: "three-symbol cycle pipeline: kernel, lambda2 = 1/4, rho = 1/2, dual routes agree",
    2: "cycle correlation stays under 1 - 7p(1-p)/s^2 and matches the closed form",
    3: "convex decomposition: exact recomposition, part count, cycle p, alpha and rho floors",
    4: "orthogonal decomposition identities: Parseval, influences, noise operator, projections",
    5: "hitting expectation: joint-count route equals enumeration exactly",
    6: "density increment: iteration bound, resilient output, expectation never drops",
    7: "influence reduction: certified gains, product ratio, iteration cap, low final influence",
    8: "counterexamples: skewed-pair decay and zero triple product with heavy single sets",
    9: "hypercontractivity inequalities hold for random low-degree polynomials",
    10: "edge variance lower bound holds for every symbol indicator",
    11: "Gaussian reverse hypercontractivity: simulation matches quadrature and the bound",
    12: "Markov chain reduction identity is exact and the reduced function is dominated",
    13: "hitting exponent fits: slope 2 for independent steps, slope 1 for identical steps",
}

_results: dict[int, str] = {}


def pytest_runtest_logreport(report):
    match = _ACCEPTANCE_RE.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "call":
        _results[number] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and not report.passed:
        _results[number] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        status = _results.get(number, "SKIP")
        terminalreporter.write_line(f"{status} criterion {number:2d}: {_CRITERIA[number]}")
