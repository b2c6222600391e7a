"""Explicit super-solution barriers for the anisotropic porous medium equation.

The profile is f(y) = (sum_i |y_i|^theta_i)^(-alpha).  Its scaled version
f^(lam)(y) = lam^(2/(n beta)) f(x) with x_i = lam^((1-m_i)/(n beta)) y_i is a
super-solution of the stationary rescaled equation outside a level set of
the anisotropic "radius" S(x) = sum_i |x_i|^theta_i, and it is glued to a
constant plateau to build a space-time barrier for the original equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .params import ExponentSet, require_admissible


@dataclass(frozen=True)
class BarrierSpec:
    exponents: ExponentSet
    theta: tuple[float, ...]
    alpha_exp: float
    mu: tuple[float, ...]
    R0: float
    lam: float
    C0: float
    A: float
    T: float
    # lambda from the displayed lower bound, before any plateau correction
    lam_formula: float = field(default=float("nan"))

    @property
    def n(self) -> int:
        return self.exponents.n

    @property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    def plateau_half_widths(self) -> np.ndarray:
        return self.A ** (1.0 / self.theta_array)


@dataclass(frozen=True)
class BarrierDomain:
    """One of the sets the construction refers to.

    ``omega_r0``: {x : S(x) > R}; ``omega_r0_lambda``: its image under
    y_i = lam^((m_i-1)/(n beta)) x_i; ``plateau_box``: prod [-A^(1/theta_i), A^(1/theta_i)].
    """

    kind: str
    spec: BarrierSpec
    radius: float = float("nan")
    lam: float = 1.0

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind == "omega_r0":
            return anisotropic_radius(self.spec, y) > self.radius
        if self.kind == "omega_r0_lambda":
            return anisotropic_radius(self.spec, y, self.lam) > self.radius
        if self.kind == "plateau_box":
            return np.all(np.abs(y) <= self.spec.plateau_half_widths(), axis=-1)
        raise ValueError(f"unknown domain kind {self.kind!r}")


def choose_profile_params(e: ExponentSet) -> tuple[np.ndarray, float]:
    """Pick theta_i > 2 and alpha > 0 with (1-m_i)/2 < 1/(alpha theta_i) < alpha_i.

    Each 1/(alpha theta_i) is placed at the midpoint g_i of (max(mu_i, 0), alpha_i)
    and alpha = 1/(3 max g_i), which gives theta_i = 3 max(g)/g_i >= 3.
    """
    require_admissible(e)
    mu = e.mu
    a_i = e.alpha_array
    g = (np.maximum(mu, 0.0) + a_i) / 2.0
    alpha_exp = 1.0 / (3.0 * g.max())
    theta = 1.0 / (alpha_exp * g)
    inv = 1.0 / (alpha_exp * theta)
    if not (np.all(theta > 2) and np.all(mu < inv) and np.all(inv < a_i)):
        raise ArithmeticError(f"profile parameters violate the interval condition for m={e.m}")
    return theta, alpha_exp


def compute_R0(e: ExponentSet, theta, alpha_exp: float) -> float:
    theta = np.asarray(theta, dtype=float)
    m = e.m_array
    a = alpha_exp
    num = e.n * np.max(m * a * (m * a + 1.0) * theta**2)
    den = np.min(e.alpha_array * a * theta) - 1.0
    if not den > 0:
        raise ValueError(f"R0 denominator min(alpha_i alpha theta_i) - 1 = {den} is not positive")
    power = 1.0 / (2.0 * a * np.max(1.0 / (theta * a) - e.mu))
    return float(max(1.0, (num / den) ** power))


def lambda_terms(e: ExponentSet, theta, alpha_exp: float, R0: float, C0: float, A: float, T: float,
                 grouping: str = "outside") -> tuple[float, float]:
    """The two lower bounds on lambda.

    ``grouping="outside"`` multiplies (C0 A^alpha)^(n beta/2) by
    max_i (1/alpha - mu_i theta_i)^(-1); ``"inside"`` puts that factor into
    the exponent instead.
    """
    if min(C0, A) <= 0 or T < 0:
        raise ValueError("C0 and A must be positive and T nonnegative")
    theta = np.asarray(theta, dtype=float)
    a = alpha_exp
    beta = e.beta
    half = e.n * beta / 2.0
    gap = 1.0 / a - e.mu * theta
    if np.any(gap <= 0):
        raise ValueError(f"1/alpha - mu_i theta_i must be positive, got {gap}")
    first = (C0 * (1.0 + beta * T) ** (1.0 / beta) * R0**a) ** half
    factor = float(np.max(1.0 / gap))
    if grouping == "outside":
        second = (C0 * A**a) ** half * factor
    elif grouping == "inside":
        second = (C0 * A**a) ** (half * factor)
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    return float(first), float(second)


def compute_lambda(e: ExponentSet, theta, alpha_exp: float, R0: float, C0: float, A: float, T: float,
                   grouping: str = "outside") -> float:
    return max(lambda_terms(e, theta, alpha_exp, R0, C0, A, T, grouping))


def _plateau_margin(log_big_lam: float, e: ExponentSet, theta, a: float, C0: float, A: float) -> float:
    # log Lam - log(C0 A^a (sum_i Lam^(mu_i theta_i))^a), Lam = lam^(2/(n beta))
    expo = e.mu * np.asarray(theta)
    top = np.max(expo * log_big_lam)
    log_sum = top + math.log(np.sum(np.exp(expo * log_big_lam - top)))
    return log_big_lam - math.log(C0) - a * math.log(A) - a * log_sum


def plateau_holds(e: ExponentSet, theta, alpha_exp: float, lam: float, C0: float, A: float) -> bool:
    """Whether the self-similar branch is >= C0 on the whole plateau box for all t >= 0.

    The branch is smallest at the box corner at t = 0, so checking there is exact.
    """
    log_big = 2.0 / (e.n * e.beta) * math.log(lam)
    return _plateau_margin(log_big, e, theta, alpha_exp, C0, A) >= 0.0


def plateau_lambda(e: ExponentSet, theta, alpha_exp: float, C0: float, A: float) -> float:
    """Smallest lambda for which :func:`plateau_holds` is true."""
    # the margin is strictly increasing in log Lam because alpha mu_i theta_i < 1
    f = lambda s: _plateau_margin(s, e, theta, alpha_exp, C0, A)  # noqa: E731
    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2.0
    while f(hi) < 0:
        hi *= 2.0
    root = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
    lam = math.exp(root * e.n * e.beta / 2.0)
    # nudge up until the closed-form check passes in floating point
    while not plateau_holds(e, theta, alpha_exp, lam, C0, A):
        lam = math.nextafter(lam, math.inf) * (1 + 1e-15)
    return lam


def build_barrier(e: ExponentSet, C0: float, A: float, T: float, *, grouping: str = "outside",
                  enforce_plateau: bool = True) -> BarrierSpec:
    """Assemble a barrier with the smallest lambda allowed by the lower bound.

    With ``enforce_plateau`` lambda is raised, when needed, to the smallest value
    that keeps the barrier equal to C0 on the plateau box.
    """
    theta, a = choose_profile_params(e)
    R0 = compute_R0(e, theta, a)
    lam_formula = compute_lambda(e, theta, a, R0, C0, A, T, grouping)
    lam = lam_formula
    if enforce_plateau and not plateau_holds(e, theta, a, lam, C0, A):
        lam = max(lam, plateau_lambda(e, theta, a, C0, A))
    return BarrierSpec(
        exponents=e, theta=tuple(theta), alpha_exp=a, mu=tuple(e.mu), R0=R0, lam=lam,
        C0=float(C0), A=float(A), T=float(T), lam_formula=lam_formula,
    )


def default_barrier_params(values: np.ndarray, coords: list[np.ndarray], T: float,
                           theta) -> tuple[float, float, float]:
    """C0 = 2 max u0 and A such that the plateau box is twice the bounding box of supp u0."""
    values = np.asarray(values)
    if not np.any(values > 0):
        raise ValueError("initial data has empty support")
    C0 = 2.0 * float(values.max())
    support = values > 0
    A = 0.0
    for axis, (x, th) in enumerate(zip(coords, theta)):
        other = tuple(k for k in range(values.ndim) if k != axis)
        hit = np.any(support, axis=other) if other else support
        b = float(np.abs(x[hit]).max())
        A = max(A, (2.0 * max(b, np.finfo(float).tiny)) ** th)
    return C0, A, float(T)


def _coordinate_scales(spec: BarrierSpec, lam: float) -> np.ndarray:
    e = spec.exponents
    return lam ** ((1.0 - e.m_array) / (e.n * e.beta))


def anisotropic_radius(spec: BarrierSpec, y, lam: float = 1.0) -> np.ndarray:
    """S = sum_i |s_i y_i|^theta_i with s_i the coordinate scales of f^(lam)."""
    y = np.asarray(y, dtype=float)
    s = _coordinate_scales(spec, lam)
    return np.sum(np.abs(s * y) ** spec.theta_array, axis=-1)


def _check_points(spec: BarrierSpec, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != spec.n:
        raise ValueError(f"points must have last dimension {spec.n}, got shape {y.shape}")
    return y


def eval_profile(spec: BarrierSpec, y) -> np.ndarray:
    y = _check_points(spec, y)
    S = np.sum(np.abs(y) ** spec.theta_array, axis=-1)
    if np.any(S == 0):
        raise ValueError("the profile is singular at the origin")
    return S ** (-spec.alpha_exp)


def eval_scaled_profile(spec: BarrierSpec, y, lam: float | None = None) -> np.ndarray:
    lam = spec.lam if lam is None else lam
    y = _check_points(spec, y)
    e = spec.exponents
    scale = lam ** ((1.0 - e.m_array) * spec.theta_array / (e.n * e.beta))
    S = np.sum(np.abs(y) ** spec.theta_array * scale, axis=-1)
    if np.any(S == 0):
        raise ValueError("the scaled profile is singular at the origin")
    return lam ** (2.0 / (e.n * e.beta)) * S ** (-spec.alpha_exp)


def _similarity_factor(spec: BarrierSpec, t) -> np.ndarray:
    return (1.0 + spec.exponents.beta * np.asarray(t, dtype=float)) ** (1.0 / spec.exponents.beta)


def self_similar_branch(spec: BarrierSpec, x, t) -> np.ndarray:
    """h(t)^-1 f^(lam)(x_i h(t)^-alpha_i); +inf at x = 0."""
    x = _check_points(spec, x)
    e = spec.exponents
    h = _similarity_factor(spec, t)
    y = x * np.expand_dims(h, -1) ** (-e.alpha_array)
    scale = spec.lam ** ((1.0 - e.m_array) * spec.theta_array / (e.n * e.beta))
    S = np.sum(np.abs(y) ** spec.theta_array * scale, axis=-1)
    with np.errstate(divide="ignore"):
        f = spec.lam ** (2.0 / (e.n * e.beta)) * S ** (-spec.alpha_exp)
    return f / h


def eval_supersolution(spec: BarrierSpec, x, t) -> np.ndarray:
    """The barrier: the self-similar branch where it is <= C0, the constant C0 elsewhere."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > spec.T):
        raise ValueError(f"t must lie in [0, T] with T={spec.T}")
    return np.minimum(spec.C0, self_similar_branch(spec, x, t))


def stationary_residual(spec: BarrierSpec, y, lam: float | None = None) -> np.ndarray:
    """Closed-form sum_i [(g^m_i)_{y_i y_i} + alpha_i (y_i g)_{y_i}] for g = f^(lam).

    Negative values mean g is a strict super-solution of the stationary
    rescaled equation at y.  ``lam=1`` gives the unscaled profile.
    """
    lam = spec.lam if lam is None else lam
    y = _check_points(spec, y)
    if np.any(y == 0):
        raise ValueError("residual points must not lie on a coordinate hyperplane")
    e = spec.exponents
    theta = spec.theta_array
    a = spec.alpha_exp
    big = lam ** (2.0 / (e.n * e.beta))
    s = _coordinate_scales(spec, lam)
    ay = np.abs(y)
    P = (s * ay) ** theta                     # |s_i y_i|^theta_i
    Q = s**theta * ay ** (theta - 2.0)        # P_i / y_i^2
    S = P.sum(axis=-1)
    res = np.zeros(S.shape)
    for i in range(e.n):
        ai = a * e.m[i]
        th = theta[i]
        res += big ** e.m[i] * ai * th * S ** (-ai - 2.0) * Q[..., i] * ((ai + 1.0) * th * P[..., i] - (th - 1.0) * S)
        res += e.alpha[i] * big * S ** (-a - 1.0) * (S - a * th * P[..., i])
    return res


def fd_stationary_residual(spec: BarrierSpec, y, lam: float | None = None, step: float = 1e-4) -> np.ndarray:
    """Fourth-order central differences of f^(lam) values, with step ``step * |y_i|`` per axis."""
    lam = spec.lam if lam is None else lam
    y = _check_points(spec, y)
    e = spec.exponents
    g = lambda p: eval_scaled_profile(spec, p, lam)  # noqa: E731
    res = np.zeros(y.shape[:-1])
    for i in range(e.n):
        h = step * np.abs(y[..., i])
        unit = np.zeros(e.n)
        unit[i] = 1.0

        def shifted(k):
            return y + (k * h)[..., None] * unit

        gm = {k: g(shifted(k)) for k in (-2, -1, 0, 1, 2)}
        pw = {k: v ** e.m[i] for k, v in gm.items()}
        d2 = (-pw[2] + 16 * pw[1] - 30 * pw[0] + 16 * pw[-1] - pw[-2]) / (12 * h**2)
        q = {k: shifted(k)[..., i] * gm[k] for k in gm}
        d1 = (-q[2] + 8 * q[1] - 8 * q[-1] + q[-2]) / (12 * h)
        res += d2 + e.alpha[i] * d1
    return res


def sample_omega(spec: BarrierSpec, count: int, seed: int = 0, lam: float | None = None,
                 decades: float = 6.0) -> np.ndarray:
    """Scrambled-Sobol points of Omega^(lam)_{R0}, log-uniform in S over ``decades``.

    Points are built in the unscaled frame as x_i = +-(w_i S)^(1/theta_i) with w
    uniform on the simplex, then mapped by y_i = lam^((m_i-1)/(n beta)) x_i.
    """
    lam = spec.lam if lam is None else lam
    n = spec.n
    sob = qmc.Sobol(d=2 * n + 1, scramble=True, seed=seed)
    u = sob.random_base2(max(0, math.ceil(math.log2(count))))[:count]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    S = spec.R0 * 10.0 ** (decades * u[:, 0])
    if n == 1:
        w = np.ones((count, 1))
    else:
        ex = -np.log(u[:, 1:n + 1])
        w = ex / ex.sum(axis=1, keepdims=True)
    sign = np.where(u[:, n + 1:] < 0.5, -1.0, 1.0)
    x = sign * (w * S[:, None]) ** (1.0 / spec.theta_array)
    return x / _coordinate_scales(spec, lam)


def residual_certificate(spec: BarrierSpec, count: int = 10_000, seed: int = 0,
                         lam: float | None = None) -> dict:
    """Sample the residual sign over Omega^(lam)_{R0}."""
    lam = spec.lam if lam is None else lam
    pts = sample_omega(spec, count, seed, lam)
    res = stationary_residual(spec, pts, lam)
    # compare against S^-alpha-weighted scale so the numbers are readable across decades
    S = anisotropic_radius(spec, pts, lam)
    scaled = res * S ** spec.alpha_exp / lam ** (2.0 / (spec.n * spec.exponents.beta))
    return {
        "lambda": lam,
        "samples": count,
        "seed": seed,
        "min_residual": float(res.min()),
        "max_residual": float(res.max()),
        "max_scaled_residual": float(scaled.max()),
        "nonpositive": bool(np.all(res <= 0)),
    }


def envelope_lambda(spec: BarrierSpec, C1: float, R1: float) -> float:
    """lambda_1 such that f^(lambda_1) = C1 on the boundary of Omega^(lambda_1)_{R1}."""
    if not (C1 > 0 and R1 > 0):
        raise ValueError(f"inconsistent envelope parameters C1={C1}, R1={R1}")
    e = spec.exponents
    lam1 = (C1 * R1**spec.alpha_exp) ** (e.n * e.beta / 2.0)
    if not (lam1 > 0 and np.isfinite(lam1)):
        raise ValueError(f"envelope lambda is not positive/finite for C1={C1}, R1={R1}")
    return float(lam1)


def choose_envelope_radius(spec: BarrierSpec, C1: float, support_half_widths) -> float:
    """Smallest R1 >= R0 whose plateau region contains the box prod [-b_i, b_i]."""
    corner = np.asarray(support_half_widths, dtype=float)

    def inside(R1):
        lam1 = envelope_lambda(spec, C1, R1)
        return anisotropic_radius(spec, corner, lam1) <= R1

    R1 = spec.R0
    if inside(R1):
        return R1
    lo = R1
    hi = R1 * 2.0
    while not inside(hi):
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
        if hi / lo - 1 < 1e-12:
            break
    return hi


def eval_envelope(spec: BarrierSpec, C1: float, R1: float, y) -> np.ndarray:
    """F(y) = f^(lambda_1)(y) on Omega^(lambda_1)_{R1} and C1 elsewhere."""
    if R1 < spec.R0:
        raise ValueError(f"R1={R1} must be at least R0={spec.R0}")
    lam1 = envelope_lambda(spec, C1, R1)
    y = _check_points(spec, y)
    e = spec.exponents
    S = anisotropic_radius(spec, y, lam1)
    with np.errstate(divide="ignore"):
        f = lam1 ** (2.0 / (e.n * e.beta)) * S ** (-spec.alpha_exp)
    return np.where(S > R1, np.minimum(f, C1), C1)


def format_report(spec: BarrierSpec, certificate: dict | None = None) -> str:
    e = spec.exponents
    lines = [
        "m: " + ", ".join(f"{v:.17g}" for v in e.m),
        f"beta: {e.beta:.17g}",
        "theta: " + ", ".join(f"{v:.17g}" for v in spec.theta),
        f"alpha: {spec.alpha_exp:.17g}",
        f"R0: {spec.R0:.17g}",
        f"lambda_formula: {spec.lam_formula:.17g}",
        f"lambda: {spec.lam:.17g}",
        f"C0: {spec.C0:.17g}",
        f"A: {spec.A:.17g}",
        f"T: {spec.T:.17g}",
        "plateau_half_widths: " + ", ".join(f"{v:.17g}" for v in spec.plateau_half_widths()),
    ]
    if certificate:
        for key in ("samples", "seed", "min_residual", "max_residual", "max_scaled_residual"):
            lines.append(f"residual_{key}: {certificate[key]}")
        lines.append(f"residual_certificate: {'pass' if certificate['nonpositive'] else 'fail'}")
    return "\n".join(lines) + "\n"
