"""Connection kernel: profile functions, model parameters, edge coins.

A profile is a nonincreasing map ``[0, inf) -> [0, 1]``.  Its normalization
constant is the integral of ``profile(|x|^d)`` over R^d; the indicator family
is built dimension-normalized so this constant is exactly one, while the
polynomial family ``min(1, x**-delta)`` is deliberately left unnormalized and
every limit formula downstream carries the constant explicitly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .geometry import Space, Vertex, torus_distance

__all__ = [
    "Profile",
    "IndicatorProfile",
    "PolynomialProfile",
    "CustomProfile",
    "ModelParams",
    "EdgeCoinSource",
    "unit_ball_volume",
    "normalization_constant",
    "normalization_by_quadrature",
    "connection_probability",
    "kernel_argument",
    "parse_profile",
    "format_profile",
]


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in dimension d (exact at d=1, where it is 2)."""
    if d % 2 == 0:
        return math.pi ** (d // 2) / math.factorial(d // 2)
    k = (d - 1) // 2
    return 2.0 * math.factorial(k) * (4.0 * math.pi) ** k / math.factorial(d)


class Profile:
    """Base class for connection profiles, tied to a working dimension."""

    d: int

    def value(self, x: float) -> float:
        raise NotImplementedError

    def values(self, x: np.ndarray) -> np.ndarray:
        """Vectorized profile evaluation."""
        return np.asarray([self.value(float(v)) for v in np.atleast_1d(x)])

    def tail_mass(self, z: float) -> float:
        """Integral of the profile over its scalar argument from ``z`` to infinity."""
        raise NotImplementedError

    def scalar_mass(self) -> float:
        return self.tail_mass(0.0)

    def quantile(self, p: float) -> float:
        """Value ``v`` such that the profile mass on ``[0, v]`` is ``p * scalar_mass``.

        ``p = 1`` returns the support bound, or infinity for unbounded profiles.
        """
        raise NotImplementedError

    @property
    def support_bound(self) -> float | None:
        """Hard support bound of the profile argument, or None if unbounded."""
        return None

    @property
    def tail_exponent(self) -> float:
        """Polynomial decay rate of the tail; infinity for bounded support."""
        return math.inf

    @property
    def normalization(self) -> float:
        """The constant ``I = integral of profile(|x|^d) over R^d``."""
        return unit_ball_volume(self.d) * self.scalar_mass()

    def spec(self) -> str:
        raise NotImplementedError


def _eval_guard(x) -> None:
    if np.any(np.asarray(x) < 0):
        raise ValueError("profile argument must be nonnegative")


@dataclass(frozen=True)
class IndicatorProfile(Profile):
    """Flat profile of width ``a``, height ``1/(V_d * a)``.

    In dimension one this is the ``1/(2a)`` indicator family; the height is
    dimension-adjusted so the normalization constant is one in every dimension.
    For ``a = 1/2`` and ``d = 1`` the profile only takes the values zero and one.
    """

    a: float
    d: int = 1

    def __post_init__(self) -> None:
        if self.a < 0.5:
            raise ValueError(f"indicator width must be >= 1/2, got {self.a}")
        if self.height > 1.0 + 1e-12:
            raise ValueError(
                f"indicator(a={self.a}) in dimension {self.d} has height > 1"
            )

    @property
    def height(self) -> float:
        return 1.0 / (unit_ball_volume(self.d) * self.a)

    def value(self, x: float) -> float:
        _eval_guard(x)
        return self.height if x <= self.a else 0.0

    def values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _eval_guard(x)
        return np.where(x <= self.a, self.height, 0.0)

    def tail_mass(self, z: float) -> float:
        return self.height * max(self.a - z, 0.0)

    def quantile(self, p: float) -> float:
        return p * self.a

    @property
    def support_bound(self) -> float | None:
        return self.a

    @property
    def normalization(self) -> float:
        return 1.0

    def spec(self) -> str:
        return f"indicator(a={self.a!r})"


@dataclass(frozen=True)
class PolynomialProfile(Profile):
    """Heavy-tailed profile ``min(1, x**-delta)`` with ``delta > 1``.

    Left unnormalized on purpose so the usual examples stay usable verbatim;
    its normalization constant is ``V_d * delta / (delta - 1)``.
    """

    delta: float
    d: int = 1

    def __post_init__(self) -> None:
        # delta <= 1 is not integrable; the boundary case is rejected outright.
        if not self.delta > 1.0:
            raise ValueError(f"polynomial exponent must be > 1, got {self.delta}")

    def value(self, x: float) -> float:
        _eval_guard(x)
        return 1.0 if x <= 1.0 else x ** (-self.delta)

    def values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _eval_guard(x)
        out = np.ones_like(x)
        big = x > 1.0
        out[big] = x[big] ** (-self.delta)
        return out

    def tail_mass(self, z: float) -> float:
        if z <= 1.0:
            return (1.0 - z) + 1.0 / (self.delta - 1.0)
        return z ** (1.0 - self.delta) / (self.delta - 1.0)

    def quantile(self, p: float | np.ndarray) -> float | np.ndarray:
        p_arr = np.asarray(p, dtype=float)
        target = p_arr * self.scalar_mass()
        rest = np.maximum((target - 1.0) * (self.delta - 1.0), 0.0)
        base = np.maximum(1.0 - rest, 1e-300)
        tail = np.where(rest < 1.0, base ** (-1.0 / (self.delta - 1.0)), np.inf)
        out = np.where(target <= 1.0, target, tail)
        return float(out) if out.ndim == 0 else out

    @property
    def tail_exponent(self) -> float:
        return self.delta

    @property
    def normalization(self) -> float:
        return unit_ball_volume(self.d) * self.delta / (self.delta - 1.0)

    def spec(self) -> str:
        return f"polynomial(delta={self.delta!r})"


class CustomProfile(Profile):
    """User-supplied nonincreasing profile.

    Either a hard ``support_bound`` or a ``tail_exponent`` must be declared so
    samplers and the cell index can reason about the tail.  Monotonicity and
    range are spot-checked on a grid at construction.
    """

    def __init__(
        self,
        func,
        d: int = 1,
        support_bound: float | None = None,
        tail_exponent: float | None = None,
        name: str = "custom",
    ) -> None:
        if support_bound is None and tail_exponent is None:
            raise ValueError("custom profile needs a support bound or a tail exponent")
        if tail_exponent is not None and not tail_exponent > 1.0:
            raise ValueError("declared tail exponent must be > 1")
        self._func = func
        self.d = d
        self._support = support_bound
        self._tail = math.inf if support_bound is not None else float(tail_exponent)
        self.name = name
        self._spot_check()
        self._mass = self._integrate_tail(0.0)
        if not (math.isfinite(self._mass) and self._mass > 0):
            raise ValueError("custom profile is not integrable")

    def _spot_check(self) -> None:
        hi = self._support if self._support is not None else 50.0
        grid = np.linspace(0.0, hi, 64)
        vals = np.array([float(self._func(x)) for x in grid])
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            raise ValueError("custom profile values must lie in [0, 1]")
        if np.any(np.diff(vals) > 1e-9):
            raise ValueError("custom profile must be nonincreasing")

    def _integrate_tail(self, z: float) -> float:
        if self._support is not None:
            if z >= self._support:
                return 0.0
            val, _ = integrate.quad(self._func, z, self._support, epsrel=1e-10, limit=200)
            return val
        val, _ = integrate.quad(self._func, z, np.inf, epsrel=1e-10, limit=200)
        return val

    def value(self, x: float) -> float:
        _eval_guard(x)
        return float(self._func(x))

    def values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _eval_guard(x)
        return np.array([float(self._func(v)) for v in x.ravel()]).reshape(x.shape)

    def tail_mass(self, z: float) -> float:
        return self._integrate_tail(z)

    def quantile(self, p: float | np.ndarray) -> float | np.ndarray:
        if not np.isscalar(p) and np.asarray(p).ndim > 0:
            return np.array([self.quantile(float(v)) for v in np.asarray(p)])
        p = float(p)
        if p >= 1.0:
            return self._support if self._support is not None else math.inf
        target = p * self._mass
        hi = self._support if self._support is not None else 1.0
        if self._support is None:
            while self._mass - self._integrate_tail(hi) < target:
                hi *= 2.0
        return optimize.brentq(
            lambda v: (self._mass - self._integrate_tail(v)) - target, 0.0, hi, rtol=1e-12
        )

    @property
    def support_bound(self) -> float | None:
        return self._support

    @property
    def tail_exponent(self) -> float:
        return self._tail

    def spec(self) -> str:
        return self.name


def normalization_constant(profile: Profile) -> float:
    """Normalization constant of a profile in its working dimension."""
    return profile.normalization


def normalization_by_quadrature(profile: Profile, rtol: float = 1e-8) -> float:
    """Recompute the normalization constant by adaptive quadrature.

    Independent of the per-family analytic forms; used to verify them.
    """
    hi = profile.support_bound
    if hi is not None:
        val, err = integrate.quad(profile.value, 0.0, hi, epsrel=rtol, limit=200)
    else:
        val, err = integrate.quad(profile.value, 0.0, np.inf, epsrel=rtol, limit=200)
    if not math.isfinite(val) or (val > 0 and err / val > 100 * rtol):
        raise ValueError("profile normalization quadrature did not converge")
    return unit_ball_volume(profile.d) * val


_PROFILE_RE = re.compile(r"^\s*(indicator|polynomial)\s*\(\s*(a|delta)\s*=\s*([^)]+)\)\s*$")


def parse_profile(spec: str, d: int = 1) -> Profile:
    """Parse the config grammar ``indicator(a=..)`` / ``polynomial(delta=..)``."""
    m = _PROFILE_RE.match(spec)
    if not m:
        raise ValueError(f"cannot parse profile spec {spec!r}")
    family, key, raw = m.groups()
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValueError(f"bad numeric value in profile spec {spec!r}") from exc
    if family == "indicator":
        if key != "a":
            raise ValueError(f"indicator profile takes 'a', got {key!r}")
        return IndicatorProfile(a=value, d=d)
    if key != "delta":
        raise ValueError(f"polynomial profile takes 'delta', got {key!r}")
    return PolynomialProfile(delta=value, d=d)


def format_profile(profile: Profile) -> str:
    return profile.spec()


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set: attachment strength, edge density, profile, space."""

    beta: float
    gamma: float
    profile: Profile
    space: Space

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.profile.d != self.space.d:
            raise ValueError(
                f"profile dimension {self.profile.d} != space dimension {self.space.d}"
            )

    @property
    def effective_beta(self) -> float:
        """``beta`` times the profile normalization constant."""
        return self.beta * self.profile.normalization


def kernel_argument(
    older_age: float | np.ndarray,
    younger_age: float | np.ndarray,
    distance: float | np.ndarray,
    params: ModelParams,
) -> float | np.ndarray:
    """Scalar argument fed to the profile for a pair with the given ages.

    Symmetric form ``(s_max)**(1-gamma) * (s_min)**gamma * distance**d / beta``;
    invariant under the space-time rescaling.
    """
    s = np.minimum(older_age, younger_age)
    u = np.maximum(older_age, younger_age)
    g = params.gamma
    return u ** (1.0 - g) * s**g * np.asarray(distance, dtype=float) ** params.space.d / params.beta


def connection_probability(
    younger: Vertex,
    older: Vertex,
    params: ModelParams,
    form: str = "growth",
) -> float:
    """Probability that an arriving vertex links to an existing one.

    ``form="growth"`` evaluates the arrival-time rule (and insists the second
    argument is genuinely older); ``form="limit"`` evaluates the symmetric
    limit rule.  The two agree whenever the growth form is defined.
    """
    if younger.birth_time == older.birth_time:
        raise ValueError("equal birth times: malformed input (a probability-zero event)")
    dist = torus_distance(younger.position, older.position, params.space)
    if form == "growth":
        if older.birth_time > younger.birth_time:
            raise ValueError("growth form requires the second vertex to be older")
        t, s = younger.birth_time, older.birth_time
        arg = t * dist**params.space.d / (params.beta * (t / s) ** params.gamma)
    elif form == "limit":
        arg = kernel_argument(older.birth_time, younger.birth_time, dist, params)
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(params.profile.value(float(arg)))


# SplitMix64 finalizer constants.
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


@dataclass(frozen=True)
class EdgeCoinSource:
    """Counter-based uniform coins keyed by (seed, older id, younger id).

    The coin for a pair is a pure function of the key, so edge decisions do not
    depend on the order in which pairs are examined.  This is what lets the
    cell-index simulator reproduce the reference simulator bit for bit.
    """

    seed: int

    def coin(self, older_id: int, younger_id: int) -> float:
        if older_id == younger_id:
            raise ValueError("edge coin requires two distinct ids")
        h = _mix64(self.seed ^ _GOLDEN)
        h = _mix64(h ^ (older_id & _MASK))
        h = _mix64(h ^ (younger_id & _MASK))
        return ((h >> 11) + 0.5) * 2.0**-53

    def coins(self, older_ids: np.ndarray, younger_ids: np.ndarray) -> np.ndarray:
        """Vectorized coins; bit-identical to the scalar path."""
        older = np.atleast_1d(np.asarray(older_ids, dtype=np.uint64))
        younger = np.broadcast_to(
            np.asarray(younger_ids, dtype=np.uint64), older.shape
        )
        if np.any(older == younger):
            raise ValueError("edge coin requires two distinct ids")
        h = np.uint64(_mix64(self.seed ^ _GOLDEN))
        h = _mix64_vec(h ^ older)
        h = _mix64_vec(h ^ younger)
        return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))
