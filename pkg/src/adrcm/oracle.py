"""Analytic and quadrature evaluation of the limit laws, sampler-independent.

Everything here is derived from the connection kernel alone and serves as
ground truth for the simulators.  Profiles need not be normalized: wherever a
closed form assumes a normalized profile, ``beta`` is replaced by
``beta * I`` with ``I`` the profile's normalization constant; for normalized
profiles (the indicator family) the formulas reduce to their literal shape.

Quadrature notes: integrands with an ``s**-gamma`` blow-up at the origin are
transformed by ``s = v**(1/(1-gamma))`` which removes the singularity; the
substitution ``s = u * sigma`` collapses the double age integral of the edge
length measure into a smooth unit-square integral.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, optimize, stats

from .kernel import ModelParams

__all__ = [
    "out_mean",
    "outdegree_pmf",
    "indegree_mean_at_age",
    "mixing_density",
    "indegree_pmf",
    "indegree_pmf_table",
    "total_degree_pmf_table",
    "lambda_u",
    "pi_density",
    "pi_cdf",
    "eta",
    "edge_length_measure",
    "edge_length_tail_indicator",
    "max_outedge_tail",
    "local_clustering_quadrature",
]

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-11, limit=200)


def _quiet_quad(func, a, b, **kw):
    """Adaptive quadrature with the advisory roundoff warning muted.

    Deep-tail integrands push the requested tolerance below what extrapolation
    can certify; the achieved accuracy is verified against closed forms in the
    test suite instead.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(func, a, b, **kw)


def out_mean(params: ModelParams) -> float:
    """Mean outdegree of the root: ``beta * I / (1 - gamma)``, age-independent."""
    return params.effective_beta / (1.0 - params.gamma)


def outdegree_pmf(k: int | np.ndarray, params: ModelParams) -> float | np.ndarray:
    """Limit outdegree law: Poisson with the age-independent mean."""
    return stats.poisson.pmf(k, out_mean(params))


def indegree_mean_at_age(u: float, params: ModelParams, s0: float = 1.0) -> float:
    """Mean number of younger neighbors accrued by age-``u`` root up to ``s0``."""
    g = params.gamma
    return params.effective_beta * (s0**g * u**-g - 1.0) / g


def mixing_density(lam: float | np.ndarray, params: ModelParams) -> float | np.ndarray:
    """Density of the random Poisson mean behind the indegree law."""
    b = params.effective_beta
    g = params.gamma
    return b ** (1.0 / g) * (g * np.asarray(lam, dtype=float) + b) ** -(1.0 + 1.0 / g)


def _age_of_mean(lam: float, params: ModelParams) -> float:
    """Inverse of ``indegree_mean_at_age`` at ``s0=1``, clipped to (0, 1]."""
    g = params.gamma
    return (1.0 + g * lam / params.effective_beta) ** (-1.0 / g)


def indegree_pmf(k: int, params: ModelParams, form: str = "u") -> float:
    """Limit indegree law, by either of two independent quadratures.

    ``form="u"`` integrates the Poisson pmf against the uniform root age;
    ``form="lambda"`` integrates it against the mixing density.  The two must
    agree to high relative accuracy.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    g = params.gamma
    b = params.effective_beta

    # The integrand concentrates where the Poisson mean passes k; both forms
    # are integrated piecewise between mean levels k + c*sqrt(k+1) so the
    # adaptive rule never has to find the spike on its own.
    spread = math.sqrt(k + 1.0)
    levels = [max(k + c * spread, 0.0) for c in (-12, -6, -3, -1, 0, 1, 3, 6, 12, 30)]

    if form == "u":

        def integrand(u: float) -> float:
            if u <= 0.0:
                return 0.0
            return float(stats.poisson.pmf(k, b * (u**-g - 1.0) / g))

        cuts = sorted({_age_of_mean(lv, params) for lv in levels} | {0.0, 1.0})
        return math.fsum(
            integrate.quad(integrand, lo, hi, epsabs=1e-16, epsrel=1e-11, limit=200)[0]
            for lo, hi in zip(cuts[:-1], cuts[1:])
            if hi > lo
        )

    if form == "lambda":

        def integrand(lam: float) -> float:
            return float(stats.poisson.pmf(k, lam)) * float(mixing_density(lam, params))

        cuts = sorted(set(levels))
        head = math.fsum(
            integrate.quad(integrand, lo, hi, epsabs=1e-16, epsrel=1e-11, limit=200)[0]
            for lo, hi in zip(cuts[:-1], cuts[1:])
            if hi > lo
        )
        tail, _ = integrate.quad(integrand, cuts[-1], np.inf, epsabs=1e-16, epsrel=1e-11, limit=200)
        return head + tail

    raise ValueError(f"unknown form {form!r}")


def indegree_pmf_table(k_max: int, params: ModelParams, form: str = "u") -> np.ndarray:
    return np.array([indegree_pmf(k, params, form=form) for k in range(k_max + 1)])


def total_degree_pmf_table(k_max: int, params: ModelParams) -> np.ndarray:
    """Law of the root's total degree: convolution of the out and in laws."""
    mu = indegree_pmf_table(k_max, params)
    nu = outdegree_pmf(np.arange(k_max + 1), params)
    total = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        total[k] = float(np.sum(nu[: k + 1] * mu[k::-1]))
    return total


def lambda_u(u: float | np.ndarray, params: ModelParams) -> float | np.ndarray:
    """Mean total degree of a root of age ``u``; also the wedge-law rate."""
    g = params.gamma
    b = params.effective_beta
    return b / g * ((2.0 * g - 1.0) / (1.0 - g) + np.asarray(u, dtype=float) ** -g)


def _pi_unnormalized(u: float | np.ndarray, params: ModelParams) -> float | np.ndarray:
    with np.errstate(divide="ignore"):
        lam = lambda_u(np.maximum(np.asarray(u, dtype=float), 1e-300), params)
    return 1.0 - np.exp(-lam) - lam * np.exp(-lam)


def _pi_norm(params: ModelParams) -> float:
    val, _ = integrate.quad(lambda u: float(_pi_unnormalized(u, params)), 0.0, 1.0, **_QUAD_OPTS)
    return val


def pi_density(u: float | np.ndarray, params: ModelParams) -> float | np.ndarray:
    """Density of the root age conditioned on having degree at least two."""
    return _pi_unnormalized(u, params) / _pi_norm(params)


def pi_cdf(u: float, params: ModelParams) -> float:
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    val, _ = integrate.quad(lambda v: float(_pi_unnormalized(v, params)), 0.0, u, **_QUAD_OPTS)
    return val / _pi_norm(params)


def eta(params: ModelParams) -> float:
    """Edge-length tail exponent ``min(d, d(1/gamma - 1), d(delta - 1))``."""
    d = params.space.d
    g = params.gamma
    terms = [float(d), d * (1.0 / g - 1.0)]
    delta = params.profile.tail_exponent
    if math.isfinite(delta):
        terms.append(d * (delta - 1.0))
    return min(terms)


def _profile_breakpoints(profile) -> tuple[float, ...]:
    """Arguments where the profile tail mass loses smoothness (kink points)."""
    if profile.support_bound is not None:
        return (profile.support_bound,)
    return (1.0,)


def edge_length_measure(lo: float, hi: float, params: ModelParams, method: str = "quadrature") -> float:
    """Probability a limit edge has rescaled length in ``[lo, hi)``.

    The quadrature route reduces the triple integral to a smooth unit-square
    integral of profile tail masses.  For indicator profiles a closed radial
    form is available as an independent second route.
    """
    if not 0.0 <= lo < hi:
        raise ValueError("need 0 <= lo < hi")
    if method == "closed":
        return edge_length_tail_indicator(lo, params) - (
            edge_length_tail_indicator(hi, params) if math.isfinite(hi) else 0.0
        )
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    d = params.space.d
    g = params.gamma
    b = params.beta
    profile = params.profile
    elo = lo**d
    ehi = hi**d if math.isfinite(hi) else math.inf
    power = g / (1.0 - g)
    kinks = _profile_breakpoints(profile)
    ends = [e for e in (elo, ehi) if math.isfinite(e) and e > 0.0]

    def inner(u: float) -> float:
        if u <= 0.0:
            return profile.scalar_mass() if elo == 0.0 and not math.isfinite(ehi) else 0.0
        pts = sorted(
            v
            for z0 in kinks
            for e in ends

            if 0.0 < (v := (z0 * b / (u * e)) ** ((1.0 - g) / g)) < 1.0
        )

        def f(v: float) -> float:
            c = u * v**power / b
            head = profile.tail_mass(c * elo)
            if math.isfinite(ehi):
                head -= profile.tail_mass(c * ehi)
            return head

        val, _ = _quiet_quad(f, 0.0, 1.0, points=pts or None, epsabs=1e-15, epsrel=1e-12, limit=200)
        return val

    from .kernel import unit_ball_volume

    outer_pts = sorted(
        {z0 * b / e for z0 in kinks for e in ends if 0.0 < z0 * b / e < 1.0}
    )
    val, _ = _quiet_quad(
        inner, 0.0, 1.0, points=outer_pts or None, epsabs=1e-14, epsrel=1e-11, limit=200
    )
    return unit_ball_volume(d) / profile.normalization * val


def edge_length_tail_indicator(k: float, params: ModelParams) -> float:
    """Closed form of the edge-length tail mass ``[k, inf)`` for indicator profiles.

    Derived by integrating the truncated radial mass explicitly; the age
    integral splits at the scale where the hard support bound starts to bite.
    """
    from .kernel import IndicatorProfile

    if not isinstance(params.profile, IndicatorProfile):
        raise ValueError("closed radial form requires an indicator profile")
    if k <= 0.0:
        return 1.0
    g = params.gamma
    a = params.profile.a
    big_t = k**params.space.d / (a * params.beta)
    if big_t <= 1.0:
        return 1.0 - (1.0 - g) * big_t / 2.0
    p = (1.0 - g) / g
    head = 1.0 / big_t - (1.0 - g) / (2.0 * big_t)
    if abs(g - 0.5) < 1e-12:
        j = math.log(big_t)
    else:
        j = (1.0 - big_t ** (p - 1.0)) / (1.0 - p)
    return head + g * big_t**-p * j


def _older_tail_rate(r: float, u: float, params: ModelParams, q: float = 1.0) -> float:
    """Mass of the older-neighbor intensity beyond radius ``r`` for root age ``u``.

    With ``q < 1`` the age range is first truncated to the mass-q sub-interval
    used by the sampler; in the singularity-removing variable the truncation
    is simply a lower integration limit of ``1 - q``.
    """
    from .kernel import unit_ball_volume

    profile = params.profile
    d = params.space.d
    g = params.gamma
    power = g / (1.0 - g)
    e = r**d

    def integrand(v: float) -> float:
        c = u * v**power * e / params.beta
        return profile.tail_mass(c)

    pts = None
    if u > 0.0 and e > 0.0:
        pts = sorted(
            v
            for z0 in _profile_breakpoints(profile)
            if 1.0 - q < (v := (z0 * params.beta / (u * e)) ** ((1.0 - g) / g)) < 1.0
        ) or None
    val, _ = _quiet_quad(integrand, 1.0 - q, 1.0, points=pts, **_QUAD_OPTS)
    return unit_ball_volume(d) * params.beta / (1.0 - g) * val


def max_outedge_tail(k: float, a_exp: float, params: ModelParams, q: float = 1.0) -> float:
    """Probability that the root's longest out-edge, to power ``a_exp``, is >= k."""
    if k <= 0.0:
        return 1.0
    r = k ** (1.0 / a_exp)

    def integrand(u: float) -> float:
        return 1.0 - math.exp(-_older_tail_rate(r, u, params, q=q))

    val, _ = _quiet_quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-9, limit=200)
    return val


def _uniform_diff_within(r1: float, r2: float, length: float) -> float:
    """P(|X1 - X2| <= length) for independent uniforms on [-r1, r1], [-r2, r2]."""
    if length <= 0.0:
        return 0.0
    if r1 == 0.0 or r2 == 0.0:
        if r1 == 0.0 and r2 == 0.0:
            return 1.0
        r = max(r1, r2)
        return min(length / r, 1.0) if length < r else 1.0
    wide = max(r1 + r2 - length, 0.0)
    narrow = max(abs(r1 - r2) - length, 0.0)
    return 1.0 - (wide**2 - narrow**2) / (4.0 * r1 * r2)


def local_clustering_quadrature(u: float, params: ModelParams, q: float = 1.0) -> float:
    """Deterministic evaluation of the two-neighbor connection probability.

    Only for indicator profiles in dimension one, where both the neighbor
    positions (uniform on an age-dependent segment) and the pair rule (a hard
    distance threshold) integrate in closed form, leaving a smooth double age
    integral.  Serves as the independent check of the Monte Carlo estimator.
    """
    from .kernel import IndicatorProfile

    if params.space.d != 1 or not isinstance(params.profile, IndicatorProfile):
        raise ValueError("quadrature oracle covers indicator profiles in dimension 1")
    g = params.gamma
    b = params.beta
    a = params.profile.a
    height = params.profile.height

    mass_old = out_mean(params)
    mass_young = indegree_mean_at_age(u, params) if u < 1.0 else 0.0
    w_old = mass_old / (mass_old + mass_young)

    # Mass-q truncated age ranges, mirroring the sampler's region.
    s_lo = u * (1.0 - q) ** (1.0 / (1.0 - g))
    s_hi = (u**g + q * (1.0 - u**g)) ** (1.0 / g) if u < 1.0 else 1.0

    def age_density(s: float) -> float:
        # Normalized age density of a neighbor: older part below u, younger above.
        if s < u:
            return w_old * (1.0 - g) * s**-g / (q * u ** (1.0 - g))
        return (1.0 - w_old) * g * s ** (g - 1.0) / (q * (1.0 - u**g))

    def radius(s: float) -> float:
        # Support radius of the position law at neighbor age s (fibers untruncated).
        if s < u:
            c = u ** (1.0 - g) * s**g / b
        else:
            c = s ** (1.0 - g) * u**g / b
        return a / c

    def pair_term(s1: float, s2: float) -> float:
        c12 = max(s1, s2) ** (1.0 - g) * min(s1, s2) ** g / b
        within = _uniform_diff_within(radius(s1), radius(s2), a / c12)
        return age_density(s1) * age_density(s2) * height * within

    total = 0.0
    pieces = [(s_lo, u), (u, s_hi)] if u < 1.0 else [(s_lo, 1.0)]
    for lo1, hi1 in pieces:
        for lo2, hi2 in pieces:
            val, _ = integrate.dblquad(
                pair_term, lo1, hi1, lo2, hi2, epsabs=1e-10, epsrel=1e-8
            )
            total += val
    return total


def find_tail_slope(tail_fn, k_values: np.ndarray) -> float:
    """Least-squares slope of ``log tail`` against ``log k``."""
    ks = np.asarray(k_values, dtype=float)
    vals = np.array([tail_fn(k) for k in ks])
    coeffs = np.polyfit(np.log(ks), np.log(vals), 1)
    return float(coeffs[0])
