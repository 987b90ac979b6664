"""Scalar SaS and alpha-Frechet laws: exact samplers, CF and CDF.

Random draws always come from a :class:`SeededStream`; there is no module
level random state.  A stream is a ``(seed, stream_id)`` pair mapped to a
counter-based Philox generator through :class:`numpy.random.SeedSequence`
spawn keys, so distinct stream ids (and sub-keys) give non-overlapping
streams and the same pair reproduces the same draws bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import StabAssocError
from .measure import MAX, SUM, StabilityIndex


@dataclass(frozen=True)
class SeededStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2 ** 64):
            raise StabAssocError("seed must be a 64-bit unsigned integer")
        if int(self.stream_id) < 0:
            raise StabAssocError("stream_id must be nonnegative")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream_id", int(self.stream_id))

    def generator(self, *subkeys: int) -> np.random.Generator:
        """Fresh generator for this stream, optionally for a sub-block ``subkeys``."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *map(int, subkeys)))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, stream_id: int) -> "SeededStream":
        return SeededStream(self.seed, stream_id)

    def record(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id}


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise StabAssocError("rng must be a SeededStream or numpy Generator")


@dataclass(frozen=True)
class SasLaw:
    """Symmetric alpha-stable law with CF ``exp(-sigma^alpha |theta|^alpha)``."""

    sigma: float
    alpha: float

    def __post_init__(self):
        a = self.alpha.alpha if isinstance(self.alpha, StabilityIndex) else self.alpha
        object.__setattr__(self, "alpha", StabilityIndex(a, SUM).alpha)
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise StabAssocError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class FrechetLaw:
    """alpha-Frechet law with CDF ``exp(-sigma^alpha y^-alpha)`` on ``y > 0``."""

    sigma: float
    alpha: float

    def __post_init__(self):
        a = self.alpha.alpha if isinstance(self.alpha, StabilityIndex) else self.alpha
        object.__setattr__(self, "alpha", StabilityIndex(a, MAX).alpha)
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise StabAssocError(f"sigma must be positive, got {self.sigma!r}")


def _check_count(n) -> int:
    n = int(n)
    if n < 1:
        raise StabAssocError("need at least one draw")
    return n


def standard_sas(alpha: float, n: int, gen: np.random.Generator) -> np.ndarray:
    """Unit-scale SaS draws by the Chambers-Mallows-Stuck transform.

    With ``V`` uniform on ``(-pi/2, pi/2)`` and ``W`` standard exponential,
    ``sin(a V) / cos(V)^(1/a) * (cos((1-a) V) / W)^((1-a)/a)``.
    """
    v = gen.uniform(-np.pi / 2, np.pi / 2, size=n)
    w = gen.standard_exponential(size=n)
    if alpha == 1.0:
        return np.tan(v)
    return (np.sin(alpha * v) / np.cos(v) ** (1 / alpha)
            * (np.cos((1 - alpha) * v) / w) ** ((1 - alpha) / alpha))


def standard_frechet(alpha: float, n: int, gen: np.random.Generator) -> np.ndarray:
    # open interval (0, 1) so every draw is strictly positive and finite
    u = gen.uniform(np.nextafter(0.0, 1.0), 1.0, size=n)
    return (-np.log(u)) ** (-1 / alpha)


def sample_sas(law: SasLaw, n: int, rng) -> np.ndarray:
    """``n`` i.i.d. draws from ``law``."""
    n = _check_count(n)
    return law.sigma * standard_sas(law.alpha, n, _as_generator(rng))


def frechet_from_uniform(law: FrechetLaw, u) -> np.ndarray:
    """Inverse CDF ``sigma (-ln u)^(-1/alpha)``."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise StabAssocError("uniforms must lie in (0, 1)")
    return law.sigma * (-np.log(u)) ** (-1 / law.alpha)


def sample_frechet(law: FrechetLaw, n: int, rng) -> np.ndarray:
    n = _check_count(n)
    return law.sigma * standard_frechet(law.alpha, n, _as_generator(rng))


def cf_sas(law: SasLaw, theta):
    """Characteristic function ``exp(-sigma^alpha |theta|^alpha)``."""
    theta = np.asarray(theta, dtype=float)
    out = np.exp(-(law.sigma * np.abs(theta)) ** law.alpha)
    return float(out) if out.ndim == 0 else out


def cdf_frechet(law: FrechetLaw, y):
    """CDF of ``law``; returns 0 for ``y <= 0`` (support is ``(0, inf)``)."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(y > 0, np.exp(-(law.sigma / np.where(y > 0, y, 1.0)) ** law.alpha), 0.0)
    return float(out) if out.ndim == 0 else out


def empirical_cf(samples, theta) -> np.ndarray:
    """Cosine average ``mean(cos(theta x))``; the sine part vanishes for symmetric laws."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return np.array([np.mean(np.cos(th * x)) for th in theta])
