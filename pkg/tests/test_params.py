import numpy as np
import pytest

from apme.params import (
    AdmissibilityError,
    check_admissible,
    derive_constants,
    format_report,
    require_admissible,
)


@pytest.mark.parametrize(
    "m, m_bar, beta, alpha",
    [
        ((1.0,), 1.0, 2.0, (1.0,)),
        ((0.8, 1.2), 1.0, 1.0, (0.6, 0.4)),
        ((0.5, 1.0, 1.5), 1.0, 2.0 / 3.0, (7 / 12, 1 / 3, 1 / 12)),
    ],
)
def test_derived_constants(m, m_bar, beta, alpha):
    e = derive_constants(m, len(m))
    assert e.n == len(m)
    assert e.m_bar == pytest.approx(m_bar, rel=1e-14)
    assert e.beta == pytest.approx(beta, rel=1e-14)
    assert e.alpha == pytest.approx(alpha, rel=1e-14)


def test_n_defaults_to_length():
    assert derive_constants([0.8, 1.2]).n == 2


@pytest.mark.parametrize(
    "m, n",
    [((1.0, 1.0), 3), ((1.0, -0.5), 2), ((0.0,), 1), ((1.0,) * 4, 4), ((1.0,), 0), ((np.nan,), 1)],
)
def test_derive_constants_errors(m, n):
    with pytest.raises(ValueError):
        derive_constants(m, n)


def test_admissible_case_a():
    v = check_admissible(derive_constants([0.8, 1.2]))
    assert v.admissible and bool(v)
    assert v.violations == []
    assert len(v.conditions) == 4


def test_boundary_case_rejected_by_both_forms():
    e = derive_constants([1.0, 3.0])
    v = check_admissible(e)
    assert not v.admissible
    assert v.violations == ["max m_i < (2 + sum m_i)/n"]
    assert e.alpha[1] == pytest.approx(0.0, abs=1e-15)
    assert not all(c.passed for c in v.equivalent)


def test_heat_equation_is_admissible():
    assert check_admissible(derive_constants([1.0])).admissible


@pytest.mark.parametrize(
    "m, failing",
    [
        ((1.5, 1.2), "min m_i <= 1"),
        ((0.1, 0.1, 0.1), "sum m_i > n - 2"),
        ((0.5, 3.0), "max m_i < (2 + sum m_i)/n"),
    ],
)
def test_violations_are_named(m, failing):
    v = check_admissible(derive_constants(m))
    assert failing in v.violations


def test_require_admissible():
    e = derive_constants([0.8, 1.2])
    assert require_admissible(e) is e
    with pytest.raises(AdmissibilityError, match="not admissible"):
        require_admissible(derive_constants([2.0]))


def random_exponents(rng, n):
    return rng.uniform(0.05, 3.0, n)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_identities_on_random_exponents(n):
    rng = np.random.default_rng(n)
    for _ in range(200):
        e = derive_constants(random_exponents(rng, n))
        assert sum(e.alpha) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(e.alpha_array - e.mu, e.beta / 2, atol=1e-12)
        assert e.m_bar == pytest.approx(np.mean(e.m), rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_two_forms_agree_on_random_exponents(n):
    rng = np.random.default_rng(10 + n)
    seen = set()
    for _ in range(500):
        e = derive_constants(random_exponents(rng, n))
        v = check_admissible(e)  # raises on disagreement
        equivalent = e.beta > 0 and min(e.m) <= 1 and min(e.alpha) > 0
        assert v.admissible == equivalent
        seen.add(v.admissible)
    assert seen == {True, False}


@pytest.mark.parametrize("m, n", [(0.7, 2), (1.3, 3), (0.4, 1)])
def test_isotropic_reduction(m, n):
    e = derive_constants([m] * n)
    assert np.allclose(e.alpha, 1.0 / n)
    assert e.beta == pytest.approx(m - (n - 2) / n)


def test_report_lists_conditions():
    text = format_report(derive_constants([1.0, 3.0]))
    assert "admissible: no" in text
    assert text.count("condition[") == 4
    assert "beta: 2" in text
