"""End-to-end acceptance criteria at their stated tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line per check (run with ``-s``
to see them) and fails if any check of its criterion fails.
"""

import pytest

from cbshell.acceptance import CRITERIA, run_acceptance

NAMES = {
    1: "fiber_frame_objectivity",
    2: "cantilever_elastica",
    3: "plate_hole_large_strain",
    4: "biaxial_membrane",
    5: "cylinder_inflation",
    6: "constitutive_consistency",
    7: "technique_distinctness",
}


@pytest.mark.acceptance
@pytest.mark.parametrize("k", sorted(CRITERIA), ids=[NAMES[k] for k in sorted(CRITERIA)])
def test_criterion(k):
    report = run_acceptance(k)
    checks = [c for c in report.checks if c.criterion == k]
    for c in checks:
        print(c.line())
    ok = bool(checks) and report.criterion_passed(k)
    print(f"criterion {k} ({NAMES[k]}): {'PASS' if ok else 'FAIL'}")
    assert checks, f"criterion {k} produced no checks"
    assert report.criterion_passed(k), "\n".join(c.line() for c in checks if not c.passed)
