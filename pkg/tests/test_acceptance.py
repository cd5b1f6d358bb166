"""Acceptance suite: one check per criterion, each with its runtime budget.

Tolerances and cells live in ``movingwall.verify``; this file pins the
budgets and prints one PASS/FAIL line per criterion (at the end of a pytest
run, or directly with ``python3 tests/test_acceptance.py``).
"""

import sys

import pytest

from movingwall import verify

# (criterion, runtime budget in seconds)
CRITERIA = [
    (verify.criterion_first_energy, 10),
    (verify.criterion_second_energy, 10),
    (verify.criterion_orthonormality, 5),
    (verify.criterion_multiplier, 30),
    (verify.criterion_admissibility, 60),
    (verify.criterion_boundary_observability, 120),
    (verify.criterion_point_observability, 30),
    (verify.criterion_lp, 30),
    (verify.criterion_duality, 60),
    (verify.criterion_solver, 60),
]

RESULTS: list[str] = []


def test_criteria_cover_verify_module():
    assert [f for f, _ in CRITERIA] == verify.criteria()


@pytest.mark.parametrize("criterion, budget", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 11)])
def test_acceptance(criterion, budget):
    r = criterion()
    within = r.seconds < budget
    status = "PASS" if r.passed and within else "FAIL"
    RESULTS.append(f"{status} {r.name} [{r.seconds:.2f}s / {budget}s]")
    print(r.line())
    assert r.passed, "; ".join(r.failures)
    assert within, f"took {r.seconds:.2f}s, budget {budget}s"


if __name__ == "__main__":
    ok = True
    for criterion, budget in CRITERIA:
        r = criterion()
        good = r.passed and r.seconds < budget
        ok &= good
        print(f"{'PASS' if good else 'FAIL'} {r.name} [{r.seconds:.2f}s / {budget}s]")
        for f in r.failures:
            print(f"    {f}")
    sys.exit(0 if ok else 1)
