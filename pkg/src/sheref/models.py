"""Generative models with known pre/post-change conditional densities.

All four variants are Gaussian given the past: conditionally on the observed
history, ``X_{k,t} ~ N(mean0, var)`` before the change and ``N(mean1, var)``
after it.  The one-step likelihood ratio is therefore lognormal under the null
with ``m = -d**2 / 2`` and ``v = d**2`` where ``d = (mean1 - mean0) / sqrt(var)``.

Sensor ids are 1-based; every per-sensor parameter table is indexed by
``id - 1``.  Vectorized methods take an integer array of ids and return arrays
aligned with it.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Callable, Union

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, MissingHistory, SupportViolation

UNIT_MEAN_TOL = 1e-9
DEFAULT_EMPIRICAL_BUDGET = 100_000


# ---------------------------------------------------------------------------
# null likelihood-ratio laws


@dataclass(frozen=True)
class LogNormalLaw:
    """``log L ~ Normal(m, v)`` with unit mean, i.e. ``m + v/2 = 0``."""

    m: float
    v: float

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("lognormal variance must be positive")
        if abs(self.m + self.v / 2) > UNIT_MEAN_TOL:
            raise ValueError(f"lognormal LR law must have unit mean (m + v/2 = {self.m + self.v / 2:g})")

    @classmethod
    def from_shift(cls, d: float) -> "LogNormalLaw":
        """Law of the LR between N(d, 1) and N(0, 1) evaluated under N(0, 1)."""
        v = float(d) ** 2
        return cls(m=-v / 2, v=v)

    @property
    def mean(self) -> float:
        return 1.0


@dataclass(frozen=True)
class PointMassLaw:
    value: float = 1.0

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("point mass must be nonnegative")

    @property
    def mean(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    """A Monte-Carlo sample of the null LR; the fallback when no closed form exists."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("empirical law needs a 1-d sample of size >= 2")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("likelihood ratios must be finite and nonnegative")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_sampler(
        cls,
        sampler: Callable[[np.random.Generator, int], np.ndarray],
        rng: np.random.Generator,
        budget: int = DEFAULT_EMPIRICAL_BUDGET,
    ) -> "EmpiricalLaw":
        return cls(np.asarray(sampler(rng, budget), dtype=float))

    @property
    def budget(self) -> int:
        return self.samples.size

    @property
    def mean(self) -> float:
        return float(self.samples.mean())


NullLrLaw = Union[LogNormalLaw, PointMassLaw, EmpiricalLaw]


def law_from_params(m: float, v: float) -> NullLrLaw:
    """Scalar law from the vectorized ``(m, v)`` encoding (``v == 0`` is a point mass)."""
    if v > 0:
        return LogNormalLaw(m=float(m), v=float(v))
    return PointMassLaw(math.exp(m))


# ---------------------------------------------------------------------------
# observation history


@dataclass
class History:
    """Observations of the previous tick, the only lag any variant needs.

    ``active[k]`` says whether ``k`` was in the previous active set and
    ``obs[k]`` holds its observation (NaN when unobserved).  Index 0 is unused.
    """

    active: np.ndarray
    obs: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, n_sensors: int) -> "History":
        return cls(np.zeros(n_sensors + 1, dtype=bool), np.full(n_sensors + 1, np.nan), 0)

    @classmethod
    def from_tick(cls, n_sensors: int, t: int, ids, x) -> "History":
        h = cls.empty(n_sensors)
        ids = np.asarray(ids, dtype=np.int64)
        h.active[ids] = True
        h.obs[ids] = x
        h.t = t
        return h

    def lagged(self, ids: np.ndarray) -> np.ndarray:
        """``1(k in A_{t-1}) * x_{k,t-1}`` for each id."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and ids.max() >= self.active.size:
            raise MissingHistory(f"sensor {int(ids.max())} is outside the history table")
        was = self.active[ids]
        vals = self.obs[ids]
        bad = was & np.isnan(vals)
        if bad.any():
            raise MissingHistory(f"sensor {int(ids[bad][0])} was active at t-1 but its observation is missing")
        return np.where(was, vals, 0.0)


# ---------------------------------------------------------------------------
# models


class GaussianModel(ABC):
    """Base class: subclasses supply the conditional moments and a joint sampler."""

    n_sensors: int

    @abstractmethod
    def conditional(self, ids: np.ndarray, t: int, history: History):
        """Return ``(mean0, mean1, var)`` arrays of the conditional densities."""

    @abstractmethod
    def sample(self, ids, t, post, history, rng) -> np.ndarray:
        """Draw one tick of observations for ``ids``; ``post`` flags post-change sensors."""

    def _ids(self, ids) -> np.ndarray:
        ids = np.atleast_1d(np.asarray(ids, dtype=np.int64))
        if ids.size and (ids.min() < 1 or ids.max() > self.n_sensors):
            raise ValueError(f"sensor ids must lie in 1..{self.n_sensors}")
        return ids

    def log_lr(self, ids, t, x, history) -> np.ndarray:
        ids = self._ids(ids)
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise SupportViolation("observation outside the support of the pre-change density")
        m0, m1, var = self.conditional(ids, t, history)
        return (m1 - m0) * (x - 0.5 * (m0 + m1)) / var

    def null_params(self, ids, t, history):
        """Vectorized null LR law: ``(m, v)`` of ``log L`` (``v == 0`` means ``L == 1``)."""
        m0, m1, var = self.conditional(self._ids(ids), t, history)
        v = (m1 - m0) ** 2 / var
        return -0.5 * v, v

    # scalar conveniences -------------------------------------------------

    def log_likelihood_ratio(self, k: int, t: int, x: float, history: History) -> float:
        return float(self.log_lr([k], t, [x], history)[0])

    def sample_observation(self, k: int, t: int, regime: str, history: History, rng) -> float:
        if regime not in ("pre", "post"):
            raise ValueError("regime is 'pre' or 'post'")
        return float(self.sample([k], t, np.array([regime == "post"]), history, rng)[0])

    def null_lr_law(self, k: int, t: int, history: History) -> NullLrLaw:
        m, v = self.null_params([k], t, history)
        return law_from_params(m[0], v[0])


class IidMeanShift(GaussianModel):
    """``X = eps`` before the change and ``mu + eps`` after, ``eps ~ N(0, sigma^2)`` iid."""

    def __init__(self, mu: float, sigma: float, n_sensors: int = 1):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.mu, self.sigma, self.n_sensors = float(mu), float(sigma), int(n_sensors)

    def conditional(self, ids, t, history):
        n = len(ids)
        return np.zeros(n), np.full(n, self.mu), np.full(n, self.sigma**2)

    def sample(self, ids, t, post, history, rng):
        ids = self._ids(ids)
        return self.mu * np.asarray(post, dtype=float) + self.sigma * rng.standard_normal(ids.size)


class SharedFactor(GaussianModel):
    """``X = a_k Z_t + delta + eps`` with one common factor ``Z_t`` per tick.

    The detector never sees ``Z_t``; it uses the factor-marginalized density
    ``N(delta, a_k^2 sigma_z^2 + sigma_eps^2)``.
    """

    def __init__(self, loadings, mu: float, sigma_z: float = 1.0, sigma_eps: float = 1.0, delta0: float = 0.0):
        if not (sigma_z > 0 and sigma_eps > 0):
            raise ValueError("sigma_z and sigma_eps must be positive")
        self.loadings = np.asarray(loadings, dtype=float)
        self.n_sensors = self.loadings.size
        self.mu, self.sigma_z, self.sigma_eps, self.delta0 = float(mu), float(sigma_z), float(sigma_eps), float(delta0)
        self._var = self.loadings**2 * self.sigma_z**2 + self.sigma_eps**2

    def conditional(self, ids, t, history):
        var = self._var[ids - 1]
        return np.full(var.shape, self.delta0), np.full(var.shape, self.delta0 + self.mu), var

    def sample(self, ids, t, post, history, rng):
        ids = self._ids(ids)
        z = self.sigma_z * rng.standard_normal()
        eps = self.sigma_eps * rng.standard_normal(ids.size)
        return self.loadings[ids - 1] * z + self.delta0 + self.mu * np.asarray(post, dtype=float) + eps


def banded_noise(n: int, rho: float, rng: np.random.Generator, sd: float = 1.0) -> np.ndarray:
    """One draw of ``N(0, sd^2 * Sigma)`` with ``Sigma_ij = rho^|i-j|``.

    Generated as a stationary AR(1) recursion along the sensor index, which has
    exactly this covariance.
    """
    u = rng.standard_normal(n)
    if rho == 0:
        return sd * u
    if not -1 < rho < 1:
        raise ValueError("noise correlation must lie in (-1, 1)")
    u[0] /= math.sqrt(1 - rho * rho)
    return sd * lfilter([math.sqrt(1 - rho * rho)], [1.0, -rho], u)


class WithinSensorAR(GaussianModel):
    """``X_{k,t} = a * 1(k in A_{t-1}) X_{k,t-1} + eps_{k,t}`` with regime-specific ``a``.

    The noise vector is drawn jointly over the whole pool each tick with
    correlation ``noise_rho^|i-j|`` between sensors ``i`` and ``j``.
    """

    def __init__(self, ar_pre, ar_post, n_sensors: int, noise_rho: float = 0.0, noise_sd: float = 1.0):
        self.n_sensors = int(n_sensors)
        self.ar_pre = np.broadcast_to(np.asarray(ar_pre, dtype=float), (self.n_sensors,)).copy()
        self.ar_post = np.broadcast_to(np.asarray(ar_post, dtype=float), (self.n_sensors,)).copy()
        if np.any(np.abs(self.ar_pre) >= 1) or np.any(np.abs(self.ar_post) >= 1):
            raise ValueError("autoregressive coefficients must satisfy |a| < 1")
        if not noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        self.noise_rho, self.noise_sd = float(noise_rho), float(noise_sd)

    def conditional(self, ids, t, history):
        lag = history.lagged(ids)
        return self.ar_pre[ids - 1] * lag, self.ar_post[ids - 1] * lag, np.full(lag.shape, self.noise_sd**2)

    def sample(self, ids, t, post, history, rng):
        ids = self._ids(ids)
        lag = history.lagged(ids)
        eps = banded_noise(self.n_sensors, self.noise_rho, rng, self.noise_sd)[ids - 1]
        coef = np.where(post, self.ar_post[ids - 1], self.ar_pre[ids - 1])
        return coef * lag + eps


class FixedNetworkVAR(GaussianModel):
    """``X_{k,t} = sum_l a_l X_{l,t-1} + mu 1(post) + eps_{k,t}`` over the previous network."""

    def __init__(self, coefs, mu: float, noise_rho: float = 0.0, noise_sd: float = 1.0):
        self.coefs = np.asarray(coefs, dtype=float)
        if np.any(np.abs(self.coefs) >= 1):
            raise ValueError("VAR coefficients must satisfy |a_l| < 1")
        if not noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        self.n_sensors = self.coefs.size
        self.mu, self.noise_rho, self.noise_sd = float(mu), float(noise_rho), float(noise_sd)

    def _common(self, history):
        prev = np.flatnonzero(history.active[1:]) + 1
        lag = history.lagged(prev)
        return float(self.coefs[prev - 1] @ lag)

    def conditional(self, ids, t, history):
        base = np.full(len(ids), self._common(history))
        return base, base + self.mu, np.full(len(ids), self.noise_sd**2)

    def sample(self, ids, t, post, history, rng):
        ids = self._ids(ids)
        eps = banded_noise(self.n_sensors, self.noise_rho, rng, self.noise_sd)[ids - 1]
        return self._common(history) + self.mu * np.asarray(post, dtype=float) + eps


# ---------------------------------------------------------------------------
# declarative spec


VARIANTS = ("iid_mean_shift", "shared_factor", "within_sensor_ar", "fixed_network_var")


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model description; ``build`` draws any random per-sensor parameters.

    For ``shared_factor`` the loadings are drawn uniformly from
    ``factor_loading_range`` unless ``loadings`` pins them explicitly.
    """

    variant: str
    mu: float = 3.0
    sigma: float = 1.0
    sigma_z: float = 1.0
    factor_loading_range: tuple = (0.0, 0.5)
    loadings: tuple | None = None
    ar_pre: float = -0.8
    ar_post: float = 0.8
    noise_rho: float = 0.0
    var_coef: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown model variant {self.variant!r}; choose one of {VARIANTS}", key="model.variant")
        if not self.sigma > 0:
            raise ConfigError("model.sigma must be positive", key="model.sigma")
        lo, hi = self.factor_loading_range
        if lo > hi:
            raise ConfigError("factor_loading_range must be (low, high)", key="model.factor_loading_range")

    def build(self, n_sensors: int, rng: np.random.Generator | None = None) -> GaussianModel:
        v = self.variant
        if v == "iid_mean_shift":
            return IidMeanShift(self.mu, self.sigma, n_sensors)
        if v == "shared_factor":
            if self.loadings is not None:
                a = np.asarray(self.loadings, dtype=float)
                if a.size != n_sensors:
                    raise ConfigError(f"model.loadings has {a.size} entries, pool has {n_sensors}", key="model.loadings")
            else:
                if rng is None:
                    raise ValueError("drawing factor loadings needs an rng")
                lo, hi = self.factor_loading_range
                a = rng.uniform(lo, hi, size=n_sensors)
            return SharedFactor(a, self.mu, self.sigma_z, self.sigma)
        if v == "within_sensor_ar":
            return WithinSensorAR(self.ar_pre, self.ar_post, n_sensors, self.noise_rho, self.sigma)
        return FixedNetworkVAR(np.full(n_sensors, self.var_coef), self.mu, self.noise_rho, self.sigma)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["loadings"] is None:
            del d["loadings"]
        return d


MODEL_1 = ModelSpec("shared_factor", mu=3.0, sigma=1.0, sigma_z=1.0, factor_loading_range=(0.0, 0.5))
MODEL_2 = ModelSpec("within_sensor_ar", sigma=1.0, ar_pre=-0.8, ar_post=0.8, noise_rho=-0.8)
