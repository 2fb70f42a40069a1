import os

import numpy as np

from refinery.problem import load_problem, problem_from_dict
from refinery.verify import (
    coset_sums,
    has_sum_rule,
    model_checks,
    run_invariants,
)

PROBLEMS = os.path.join(os.path.dirname(__file__), os.pardir, "problems")

EXPECTED_NAMES = [
    "mask-coset-sums",
    "transfer-digit-product",
    "grid-refinement",
    "grid-partition",
    "jordan-basis-relation",
    "eigenvalue-one-present",
    "class-residuals",
    "zero-chains-vanish",
    "homog-translate-identity",
    "basis-independence",
    "local-dimension-agreement",
    "local-dimension-vs-chain-count",
    "accuracy-order",
    "lift-calculus",
]


def shipped(name):
    return load_problem(os.path.join(PROBLEMS, name + ".json"))


def skew_problem():
    return problem_from_dict({
        "name": "skew",
        "dilation": [[2.0]],
        "digits": [[0], [1]],
        "mask": {"support": [[0], [1]], "coefficients": [1.5, 0.5]},
        "options": {"start": [1.0, 0.0, 0.0]},
    })


def test_invariant_names_and_order():
    results = run_invariants(shipped("haar"))
    assert [r.name for r in results] == EXPECTED_NAMES


def test_reference_problems_pass_everything():
    for name in ("haar", "daubechies4", "thirds", "quincunx_haar"):
        problem = shipped(name)
        assert all(r.passed for r in model_checks(problem)), name
        for r in run_invariants(problem):
            assert r.passed, (name, r.name, r.detail)


def test_coset_sums_values():
    sums = coset_sums(shipped("thirds"))
    assert np.abs(sums - 1.0).max() <= 1e-12
    assert has_sum_rule(shipped("daubechies4"))

    skew = skew_problem()
    sums = coset_sums(skew)
    assert sorted(np.round(sums.real, 12)) == [0.5, 1.5]
    assert not has_sum_rule(skew)


def test_sum_rule_dependent_checks_are_skipped():
    results = {r.name: r for r in run_invariants(skew_problem())}
    assert not results["mask-coset-sums"].passed
    assert results["grid-partition"].passed
    assert "skipped" in results["grid-partition"].detail
    assert results["eigenvalue-one-present"].passed
    assert "skipped" in results["eigenvalue-one-present"].detail
    # structural checks still run and judge the skew mask on merit
    assert not results["grid-refinement"].passed
    assert results["lift-calculus"].passed


def test_model_checks_flag_non_tile():
    results = {r.name: r for r in model_checks(shipped("sparse_digits"))}
    assert not results["tile-multiplicity"].passed
    assert "3.0" in results["tile-multiplicity"].detail
    assert not results["value-start"].passed


def test_model_checks_accept_explicit_start():
    results = {r.name: r for r in model_checks(shipped("quincunx_haar"))}
    assert results["tile-multiplicity"].passed
    assert results["value-start"].passed
