"""Sampler for the neighborhood of the typical root in the limit graph.

The root sits at the origin of R^d with an age in (0, 1].  Its older and
younger neighbors form independent Poisson processes whose intensities
factorize over (age, profile argument): the age marginal is an explicit power
law and, given the age, the profile argument is distributed like the profile
density itself.  Sampling truncates the age range to the sub-interval
carrying fraction ``q`` of the side's mass (radial fibers stay complete), so
neighbor counts are Poisson with exactly ``q`` times the analytic mass.

Three interchangeable point generators are provided: an inverse-transform
route (any profile), a plain box-rejection route, and a stratified rejection
route for indicator profiles that splits the age range into equal-mass
sub-regions to keep the acceptance rate up far from the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import IndicatorProfile, ModelParams
from .oracle import indegree_mean_at_age, lambda_u, out_mean

__all__ = [
    "MarkedPoints",
    "NeighborhoodSample",
    "older_mass",
    "younger_mass",
    "sample_older",
    "sample_younger",
    "sample_neighborhood",
    "pair_connect_probability",
    "estimate_local_clustering",
    "estimate_average_clustering",
    "sample_pi_root_ages",
    "root_degree_samples",
    "max_outedge_samples",
    "ClusteringEstimate",
]

_DEFAULT_STRATA = 32


@dataclass
class MarkedPoints:
    """Spatial points with age marks; positions are rows of an (n, d) array."""

    ages: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return len(self.ages)

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(np.sum(self.positions**2, axis=1))


@dataclass
class NeighborhoodSample:
    """One draw of the root's age and its marked older/younger neighbors."""

    root_age: float
    older: MarkedPoints
    younger: MarkedPoints
    q: float

    @property
    def degree(self) -> int:
        return len(self.older) + len(self.younger)


def older_mass(params: ModelParams, q: float = 1.0) -> float:
    """Expected older-neighbor count; independent of the root age."""
    return q * out_mean(params)


def younger_mass(u: float, params: ModelParams, s0: float = 1.0, q: float = 1.0) -> float:
    """Expected younger-neighbor count accrued up to age ``s0``."""
    if not u < s0:
        raise ValueError(f"cutoff {s0} must exceed the root age {u}")
    return q * indegree_mean_at_age(u, params, s0=s0)


def _kernel_coeff(side: str, ages: np.ndarray, u: float, params: ModelParams) -> np.ndarray:
    """Profile-argument coefficient c with argument = c * |y|^d."""
    g = params.gamma
    if side == "older":
        return u ** (1.0 - g) * np.asarray(ages) ** g / params.beta
    return np.asarray(ages) ** (1.0 - g) * u**g / params.beta


def _age_bounds(side: str, u: float, params: ModelParams, s0: float, q: float):
    """Truncated age interval carrying fraction ``q`` of the side's mass."""
    g = params.gamma
    if side == "older":
        return u * (1.0 - q) ** (1.0 / (1.0 - g)), u
    s_hi = (u**g + q * (s0**g - u**g)) ** (1.0 / g)
    return u, s_hi


def _ages_older(u: float, params: ModelParams, q: float, rng, n: int) -> np.ndarray:
    """Inverse-CDF ages on [s_lo, u); the marginal is proportional to s^-gamma."""
    g = params.gamma
    w = (1.0 - q) + q * rng.random(n)
    s = u * w ** (1.0 / (1.0 - g))
    bad = (s <= 0.0) | (s >= u)
    while np.any(bad):  # float collisions with the endpoints are resampled
        w = (1.0 - q) + q * rng.random(int(bad.sum()))
        s[bad] = u * w ** (1.0 / (1.0 - g))
        bad = (s <= 0.0) | (s >= u)
    return s


def _ages_younger(u: float, params: ModelParams, s0: float, q: float, rng, n: int) -> np.ndarray:
    """Inverse-CDF ages on (u, s_hi]; the marginal is proportional to s^(gamma-1)."""
    g = params.gamma
    w = 1.0 - rng.random(n)  # in (0, 1]
    s = (u**g + q * w * (s0**g - u**g)) ** (1.0 / g)
    bad = s <= u
    while np.any(bad):
        w = 1.0 - rng.random(int(bad.sum()))
        s[bad] = (u**g + q * w * (s0**g - u**g)) ** (1.0 / g)
        bad = s <= u
    return s


def _directions(n: int, d: int, rng) -> np.ndarray:
    if d == 1:
        return rng.choice((-1.0, 1.0), size=(n, 1))
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _points_transform(side, u, params, s0, q, rng, n) -> MarkedPoints:
    """Exact route: ages and profile arguments both by inverse transform."""
    d = params.space.d
    if side == "older":
        ages = _ages_older(u, params, q, rng, n)
    else:
        ages = _ages_younger(u, params, s0, q, rng, n)
    v = params.profile.quantile(rng.random(n))
    w = v / _kernel_coeff(side, ages, u, params)
    positions = w[:, None] ** (1.0 / d) * _directions(n, d, rng)
    return MarkedPoints(ages=ages, positions=positions)


def _points_rejection(side, u, params, s0, q, rng, n) -> MarkedPoints:
    """Plain box rejection over (age, |y|^d); needs a bounded profile argument."""
    bound = params.profile.support_bound
    if bound is None:
        raise ValueError("box rejection needs a profile with bounded support")
    d = params.space.d
    phi0 = params.profile.value(0.0)
    s_lo, s_hi = _age_bounds(side, u, params, s0, q)
    w_hi = bound / float(_kernel_coeff(side, np.asarray(s_lo), u, params))
    ages = np.empty(0)
    ws = np.empty(0)
    while len(ages) < n:
        m = max(64, 2 * (n - len(ages)))
        s = s_lo + (s_hi - s_lo) * rng.random(m)
        w = w_hi * rng.random(m)
        arg = w * _kernel_coeff(side, s, u, params)
        accept = (rng.random(m) * phi0 <= params.profile.values(arg)) & (s > 0.0)
        if side == "older":
            accept &= s < u
        else:
            accept &= s > u
        ages = np.concatenate([ages, s[accept]])
        ws = np.concatenate([ws, w[accept]])
    ages, ws = ages[:n], ws[:n]
    positions = ws[:, None] ** (1.0 / d) * _directions(n, d, rng)
    return MarkedPoints(ages=ages, positions=positions)


def _strata_bounds(side, u, params, s0, q, n_strata) -> np.ndarray:
    """Equal-mass age stratum boundaries, located by bracketed root finding."""
    from scipy import optimize

    g = params.gamma
    s_lo, s_hi = _age_bounds(side, u, params, s0, q)
    if side == "older":
        total_lo, total_hi = s_lo ** (1.0 - g), u ** (1.0 - g)

        def cdf(s):
            return (s ** (1.0 - g) - total_lo) / (total_hi - total_lo)

    else:
        total_lo, total_hi = u**g, s_hi**g

        def cdf(s):
            return (s**g - total_lo) / (total_hi - total_lo)

    bounds = [s_lo]
    for k in range(1, n_strata):
        target = k / n_strata
        bounds.append(optimize.brentq(lambda s: cdf(s) - target, s_lo, s_hi, rtol=1e-12))
    bounds.append(s_hi)
    return np.asarray(bounds)


def _points_stratified(side, u, params, s0, q, rng, n, n_strata=_DEFAULT_STRATA) -> MarkedPoints:
    """Indicator fast path: uniform stratum choice, box rejection inside it.

    Each point first draws its stratum (all carry equal mass), then proposes
    inside that stratum's bounding box until accepted; within a stratum the
    (age, |y|^d) density is flat on the admissible region, so accepted
    proposals are exact draws.  Needs ``q < 1``: the untruncated oldest-age
    end has an unbounded admissible radius and no finite box.
    """
    profile = params.profile
    if not isinstance(profile, IndicatorProfile):
        raise ValueError("the stratified route is the indicator-profile fast path")
    if side == "older" and q >= 1.0:
        raise ValueError("the stratified route needs q < 1 (finite sampling boxes)")
    d = params.space.d
    a = profile.a
    bounds = _strata_bounds(side, u, params, s0, q, n_strata)
    # Radius bound is largest at the old end of each stratum for both sides.
    w_hi = a / _kernel_coeff(side, bounds[:-1], u, params)
    stratum = rng.integers(0, n_strata, size=n)
    ages = np.empty(n)
    ws = np.empty(n)
    pending = np.arange(n)
    while len(pending):
        st = stratum[pending]
        lo, hi = bounds[st], bounds[st + 1]
        s = lo + (hi - lo) * rng.random(len(pending))
        w = w_hi[st] * rng.random(len(pending))
        ok = w * _kernel_coeff(side, s, u, params) <= a
        ok &= (s > 0.0) & ((s < u) if side == "older" else (s > u))
        hit = pending[ok]
        ages[hit] = s[ok]
        ws[hit] = w[ok]
        pending = pending[~ok]
    positions = ws[:, None] ** (1.0 / d) * _directions(n, d, rng)
    return MarkedPoints(ages=ages, positions=positions)


_ROUTES = {
    "transform": _points_transform,
    "rejection": _points_rejection,
    "stratified": _points_stratified,
}


def _draw_points(side, u, params, s0, q, rng, n, method) -> MarkedPoints:
    if n == 0:
        return MarkedPoints(ages=np.empty(0), positions=np.empty((0, params.space.d)))
    if method == "auto":
        # Both marginals invert in closed form, so the transform route is exact
        # and rejection-free; the box routes stay available for cross-checks.
        method = "transform"
    return _ROUTES[method](side, u, params, s0, q, rng, n)


def sample_older(
    u: float,
    params: ModelParams,
    q: float = 0.99,
    rng: np.random.Generator | None = None,
    method: str = "auto",
) -> MarkedPoints:
    """Older neighbors of an age-``u`` root: count Poisson(q * out-mass), marks iid."""
    if not 0.0 < u <= 1.0:
        raise ValueError(f"root age must lie in (0, 1], got {u}")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"truncation mass must lie in (0, 1], got {q}")
    rng = np.random.default_rng() if rng is None else rng
    n = int(rng.poisson(older_mass(params, q)))
    return _draw_points("older", u, params, 1.0, q, rng, n, method)


def sample_younger(
    u: float,
    params: ModelParams,
    s0: float = 1.0,
    q: float = 0.99,
    rng: np.random.Generator | None = None,
    method: str = "auto",
) -> MarkedPoints:
    """Younger neighbors accrued up to ``s0``; empty when the interval is empty."""
    if not 0.0 < u <= 1.0:
        raise ValueError(f"root age must lie in (0, 1], got {u}")
    if s0 > 1.0:
        raise ValueError(f"cutoff must be at most 1, got {s0}")
    if u >= 1.0:
        return MarkedPoints(ages=np.empty(0), positions=np.empty((0, params.space.d)))
    if s0 <= u:
        raise ValueError(f"cutoff {s0} must exceed the root age {u}")
    rng = np.random.default_rng() if rng is None else rng
    n = int(rng.poisson(younger_mass(u, params, s0=s0, q=q)))
    return _draw_points("younger", u, params, s0, q, rng, n, method)


def sample_neighborhood(
    params: ModelParams,
    q: float = 0.99,
    rng: np.random.Generator | None = None,
    root_age: float | str = "uniform",
    s0: float = 1.0,
    method: str = "auto",
) -> NeighborhoodSample:
    """Draw the root age (uniform unless fixed) and both neighbor sets."""
    rng = np.random.default_rng() if rng is None else rng
    u = 1.0 - rng.random() if root_age == "uniform" else float(root_age)
    older = _draw_points(
        "older", u, params, 1.0, q, rng, int(rng.poisson(older_mass(params, q))), method
    )
    if u < s0:
        n_y = int(rng.poisson(younger_mass(u, params, s0=s0, q=q)))
        younger = _draw_points("younger", u, params, s0, q, rng, n_y, method)
    else:
        younger = MarkedPoints(ages=np.empty(0), positions=np.empty((0, params.space.d)))
    return NeighborhoodSample(root_age=u, older=older, younger=younger, q=q)


def pair_connect_probability(
    point1: tuple[np.ndarray, float],
    point2: tuple[np.ndarray, float],
    params: ModelParams,
) -> float:
    """Connection probability of two marked points in free space."""
    (x1, s1), (x2, s2) = point1, point2
    if s1 == s2:
        raise ValueError("equal ages: malformed input")
    dist = float(np.linalg.norm(np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)))
    arg = max(s1, s2) ** (1.0 - params.gamma) * min(s1, s2) ** params.gamma
    arg *= dist**params.space.d / params.beta
    return float(params.profile.value(arg))


@dataclass
class ClusteringEstimate:
    value: float
    stderr: float
    n: int


def _neighbor_batch(u, params, q, rng, n, method):
    """n iid draws from the normalized single-neighbor law (mixture of sides)."""
    m_old = older_mass(params, q)
    m_young = younger_mass(u, params, q=q) if u < 1.0 else 0.0
    n_old = int(rng.binomial(n, m_old / (m_old + m_young))) if m_young > 0 else n
    old = _draw_points("older", u, params, 1.0, q, rng, n_old, method)
    young = _draw_points("younger", u, params, 1.0, q, rng, n - n_old, method)
    ages = np.concatenate([old.ages, young.ages])
    positions = np.vstack([old.positions, young.positions])
    perm = rng.permutation(n)
    return ages[perm], positions[perm]


def _pair_probs(ages1, pos1, ages2, pos2, params) -> np.ndarray:
    g = params.gamma
    d = params.space.d
    dist = np.sqrt(np.sum((pos1 - pos2) ** 2, axis=1))
    arg = np.maximum(ages1, ages2) ** (1.0 - g) * np.minimum(ages1, ages2) ** g
    arg = arg * dist**d / params.beta
    return params.profile.values(arg)


def estimate_local_clustering(
    u: float,
    params: ModelParams,
    n_pairs: int,
    q: float = 0.99,
    rng: np.random.Generator | None = None,
    method: str = "auto",
) -> ClusteringEstimate:
    """Probability that two independent neighbors of an age-``u`` root link up.

    Rao-Blackwellized: the pair's connection probability is averaged directly
    instead of tossing a coin for it.
    """
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng() if rng is None else rng
    a1, p1 = _neighbor_batch(u, params, q, rng, n_pairs, method)
    a2, p2 = _neighbor_batch(u, params, q, rng, n_pairs, method)
    probs = _pair_probs(a1, p1, a2, p2, params)
    se = float(np.std(probs, ddof=1) / math.sqrt(n_pairs)) if n_pairs > 1 else float("nan")
    return ClusteringEstimate(value=float(np.mean(probs)), stderr=se, n=n_pairs)


def sample_pi_root_ages(params: ModelParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Root ages biased to degree >= 2, by rejection against the uniform envelope.

    The target density is proportional to ``1 - exp(-L) - L exp(-L)`` with
    ``L = lambda_u``, which is bounded by one, so uniform proposals suffice.
    """
    out = np.empty(0)
    while len(out) < n:
        m = max(64, 2 * (n - len(out)))
        u = 1.0 - rng.random(m)
        lam = lambda_u(u, params)
        accept = rng.random(m) <= 1.0 - np.exp(-lam) - lam * np.exp(-lam)
        out = np.concatenate([out, u[accept]])
    return out[:n]


def estimate_average_clustering(
    params: ModelParams,
    n_roots: int,
    n_pairs: int,
    q: float = 0.99,
    rng: np.random.Generator | None = None,
    method: str = "auto",
) -> ClusteringEstimate:
    """Average of the local estimate over degree-biased random root ages."""
    if n_roots < 1:
        raise ValueError("need at least one root")
    rng = np.random.default_rng() if rng is None else rng
    roots = sample_pi_root_ages(params, n_roots, rng)
    means = np.array(
        [estimate_local_clustering(u, params, n_pairs, q, rng, method).value for u in roots]
    )
    se = float(np.std(means, ddof=1) / math.sqrt(n_roots)) if n_roots > 1 else float("nan")
    return ClusteringEstimate(value=float(np.mean(means)), stderr=se, n=n_roots)


def root_degree_samples(
    params: ModelParams,
    n: int,
    q: float = 0.999,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Total root degrees over uniform root ages (counts only, vectorized)."""
    rng = np.random.default_rng() if rng is None else rng
    u = 1.0 - rng.random(n)
    older = rng.poisson(older_mass(params, q), size=n)
    younger = rng.poisson(q * indegree_mean_at_age(u, params))
    return older + younger


def max_outedge_samples(
    params: ModelParams,
    n: int,
    q: float = 0.999,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Longest out-edge length per sampled neighborhood (0 when it is empty)."""
    rng = np.random.default_rng() if rng is None else rng
    d = params.space.d
    u = 1.0 - rng.random(n)
    counts = rng.poisson(older_mass(params, q), size=n)
    total = int(counts.sum())
    u_rep = np.repeat(u, counts)
    g = params.gamma
    w = (1.0 - q) + q * rng.random(total)
    ages = u_rep * w ** (1.0 / (1.0 - g))
    v = params.profile.quantile(rng.random(total))
    radii = (v / _kernel_coeff("older", ages, u_rep, params)) ** (1.0 / d)
    out = np.zeros(n)
    if total:
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        nonempty = counts > 0
        out[nonempty] = np.maximum.reduceat(radii, offsets[nonempty])
    return out
