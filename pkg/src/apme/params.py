"""Exponent sets for u_t = sum_i (u^{m_i})_{x_i x_i} and their derived constants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 3

# Relative margin under which max(m) == (2 + sum(m)) / n is treated as equality.
BOUNDARY_RTOL = 1e-12


class AdmissibilityError(ValueError):
    """Raised when an operation needs admissible exponents and did not get them."""


@dataclass(frozen=True)
class ExponentSet:
    n: int
    m: tuple[float, ...]
    m_bar: float
    beta: float
    alpha: tuple[float, ...]

    @property
    def m_array(self) -> np.ndarray:
        return np.asarray(self.m, dtype=float)

    @property
    def alpha_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @property
    def mu(self) -> np.ndarray:
        """(1 - m_i) / 2 for each axis."""
        return (1.0 - self.m_array) / 2.0


def derive_constants(m, n: int | None = None) -> ExponentSet:
    """Compute m_bar, beta and the per-axis alpha_i from the exponents.

    No admissibility is enforced here; see :func:`check_admissible`.
    """
    m = tuple(float(v) for v in np.atleast_1d(np.asarray(m, dtype=float)))
    if n is None:
        n = len(m)
    if not isinstance(n, (int, np.integer)) or n < 1 or n > MAX_DIM:
        raise ValueError(f"unsupported dimension n={n!r}; expected 1..{MAX_DIM}")
    if len(m) != n:
        raise ValueError(f"dimension mismatch: {len(m)} exponents for n={n}")
    bad = [v for v in m if not (v > 0 and np.isfinite(v))]
    if bad:
        raise ValueError(f"exponents must be positive and finite, got {bad}")
    m_bar = sum(m) / n
    beta = m_bar - (n - 2) / n
    alpha = tuple((m_bar - mi) / 2 + 1 / n for mi in m)
    return ExponentSet(n=int(n), m=m, m_bar=m_bar, beta=beta, alpha=alpha)


@dataclass
class Condition:
    name: str
    passed: bool
    detail: str


@dataclass
class Verdict:
    """Outcome of :func:`check_admissible`.

    ``conditions`` carries the four inequalities of the primary form and
    ``equivalent`` the cross-check form (beta > 0, alpha_i > 0, ...).
    """

    exponents: ExponentSet
    conditions: list[Condition] = field(default_factory=list)
    equivalent: list[Condition] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def violations(self) -> list[str]:
        return [c.name for c in self.conditions if not c.passed]

    def __bool__(self) -> bool:
        return self.admissible


def check_admissible(e: ExponentSet) -> Verdict:
    m = e.m_array
    n = e.n
    total = float(m.sum())
    bound = (2.0 + total) / n
    strict_max = m.max() < bound * (1.0 - BOUNDARY_RTOL)

    conditions = [
        Condition("m_i > 0", bool((m > 0).all()), f"min m_i = {m.min():.17g}"),
        Condition("sum m_i > n - 2", total > n - 2, f"sum m_i = {total:.17g}, n - 2 = {n - 2}"),
        Condition("min m_i <= 1", bool(m.min() <= 1.0), f"min m_i = {m.min():.17g}"),
        Condition(
            "max m_i < (2 + sum m_i)/n",
            bool(strict_max),
            f"max m_i = {m.max():.17g}, (2 + sum m_i)/n = {bound:.17g}",
        ),
    ]
    # alpha_i > 0 is the same inequality as strict_max; share its boundary margin.
    alpha_tol = BOUNDARY_RTOL * bound / 2.0
    equivalent = [
        Condition("beta > 0", e.beta > 0, f"beta = {e.beta:.17g}"),
        Condition("alpha_i > 0", min(e.alpha) > alpha_tol, f"min alpha_i = {min(e.alpha):.17g}"),
        Condition("min m_i <= 1", bool(m.min() <= 1.0), ""),
        Condition("m_i > 0", bool((m > 0).all()), ""),
    ]
    verdict = Verdict(e, conditions, equivalent)
    if verdict.admissible != all(c.passed for c in equivalent):
        raise RuntimeError(
            "internal inconsistency: the two admissibility forms disagree for "
            f"m={e.m} ({verdict.violations} vs {[c.name for c in equivalent if not c.passed]})"
        )
    return verdict


def require_admissible(e: ExponentSet) -> ExponentSet:
    verdict = check_admissible(e)
    if not verdict:
        raise AdmissibilityError(f"exponents {e.m} are not admissible: {', '.join(verdict.violations)}")
    return e


def format_report(e: ExponentSet, verdict: Verdict | None = None) -> str:
    """Key-value text report of the derived constants and the verdict."""
    verdict = verdict or check_admissible(e)
    lines = [
        f"n: {e.n}",
        "m: " + ", ".join(f"{v:.17g}" for v in e.m),
        f"m_bar: {e.m_bar:.17g}",
        f"beta: {e.beta:.17g}",
        "alpha: " + ", ".join(f"{v:.17g}" for v in e.alpha),
        f"sum_alpha: {sum(e.alpha):.17g}",
    ]
    for c in verdict.conditions:
        lines.append(f"condition[{c.name}]: {'pass' if c.passed else 'fail'} ({c.detail})")
    lines.append(f"admissible: {'yes' if verdict.admissible else 'no'}")
    return "\n".join(lines) + "\n"
