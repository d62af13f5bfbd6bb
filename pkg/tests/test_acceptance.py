"""The twelve acceptance criteria, each at its stated tolerance and time budget.

Every criterion runs the lab experiments that cover it with default settings and
prints one line ``criterion N: PASS|FAIL``.  Reports are cached per experiment
since criteria 1 and 2 read the same run.
"""

import pytest

from sdifflab import lab

# criterion -> (experiments, runtime budget in seconds)
CRITERIA = {
    1: (["basis-identities"], 10),
    2: (["basis-identities"], 10),
    3: (["ns-taylor-green"], 30),
    4: (["euler-conservation"], 30),
    5: (["sg-equivalence"], 30),
    6: (["time-reversal"], 10),
    7: (["hjb-colehopf", "burgers-from-value"], 30),
    8: (["dpp"], 180),
    9: (["feynman-kac"], 120),
    10: (["flow-volume", "nelson", "generator"], 180),
    11: (["cylinder-gradient"], 30),
    12: (["hj-vanishing-viscosity"], 60),
}

# stated tolerances; the experiment defaults must not drift from them
STATED = {
    "basis-identities": {"tol": 1e-12, "Ks": [2, 3, 4], "lie_K": 3, "lie_fields": 20, "profile": "flat"},
    "ns-taylor-green": {"tol": 1e-8, "nu": 0.1, "T": 1.0, "dt": 1e-3, "scheme": "ifrk4"},
    "euler-conservation": {"energy_tol": 1e-8, "enstrophy_tol": 1e-6, "K": 3, "T": 1.0},
    "sg-equivalence": {"tol": 1e-10, "control_min": 1e-3},
    "time-reversal": {"tol": 1e-6, "K": 2, "T": 0.1},
    "hjb-colehopf": {"tol": 1e-8, "roundtrip_tol": 1e-10},
    "burgers-from-value": {"tol": 1e-6},
    "dpp": {"paths": 100_000, "k_sigma": 3.0},
    "feynman-kac": {"paths": 100_000, "k_sigma": 3.0},
    "nelson": {"k_sigma": 3.0, "r2_min": 0.9},
    "generator": {"k_sigma": 3.0},
    "cylinder-gradient": {"tol": 1e-12},
    "hj-vanishing-viscosity": {"nus": [0.1, 0.05, 0.025]},
}

_cache: dict[str, lab.Report] = {}


def _report(name: str) -> lab.Report:
    if name not in _cache:
        _cache[name] = lab.run({"experiment": name})
    return _cache[name]


@pytest.mark.parametrize("name", sorted(STATED))
def test_defaults_match_stated_tolerances(name):
    defaults = lab.EXPERIMENTS[name].defaults
    for key, value in STATED[name].items():
        assert defaults[key] == value, f"{name}.{key}"


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(criterion, capsys):
    names, budget = CRITERIA[criterion]
    reports = [_report(n) for n in names]
    runtime = sum(r.runtime for r in reports)
    ok = all(r.passed for r in reports) and runtime < budget
    with capsys.disabled():
        print(f"\ncriterion {criterion:2d}: {'PASS' if ok else 'FAIL'} ({runtime:.1f} s of {budget} s)")
    for r in reports:
        failed = [c.name for c in r.checks if not c.passed]
        assert not failed, f"{r.experiment}: {failed}"
    assert runtime < budget
