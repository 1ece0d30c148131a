"""Kernel families: pointwise evaluation, support sets, normalization.

Two kinds live here. The rho-families are probability kernels (they
integrate to 1 over their support and feed the averaging operator); the
mu-families are the nonhomogeneous kernels appearing on the right-hand
side of the second inequality and are not normalized.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .constants import ball_volume, r_zero
from .errors import ConfigError, GateError

KERNEL_SCHEMA = "kernel_v1"


# ---------------------------------------------------------------------------
# angular sign patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantOne:
    """sigma = +1 everywhere."""

    @property
    def tau(self) -> float:
        return 1.0

    def eval_batch(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.ones(w.shape[0])

    def to_dict(self) -> dict:
        return {"type": "ConstantOne"}


@dataclass(frozen=True)
class AngularCheckerboard:
    """k equal angular sectors, a listed subset flipped to -1.

    The angular mean is exactly (unflipped - flipped)/k. Supported in
    n=1 (k must be 2: the two rays) and n=2.
    """

    k: int
    flipped: tuple
    n: int = 2

    def __post_init__(self):
        object.__setattr__(self, "flipped", tuple(sorted(int(i) for i in self.flipped)))
        if self.k < 1:
            raise ConfigError("sector count k must be >= 1")
        if any(i < 0 or i >= self.k for i in self.flipped):
            raise ConfigError("flipped sector index out of range")
        if self.n == 1 and self.k != 2:
            raise ConfigError("n=1 admits exactly 2 sectors (the two rays)")
        if self.n not in (1, 2):
            raise ConfigError("angular checkerboard supports n in {1, 2}")

    @property
    def tau(self) -> float:
        f = len(self.flipped)
        return (self.k - 2 * f) / self.k

    def eval_batch(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self.n == 1:
            sector = (w[:, 0] < 0.0).astype(np.int64)
        else:
            ang = np.mod(np.arctan2(w[:, 1], w[:, 0]), 2.0 * math.pi)
            sector = np.minimum((ang / (2.0 * math.pi / self.k)).astype(np.int64), self.k - 1)
        out = np.ones(w.shape[0])
        if self.flipped:
            out[np.isin(sector, np.asarray(self.flipped))] = -1.0
        return out

    def to_dict(self) -> dict:
        return {"type": "AngularCheckerboard", "k": self.k,
                "flipped": list(self.flipped), "n": self.n}


def sigma_from_dict(d: dict):
    if d["type"] == "ConstantOne":
        return ConstantOne()
    if d["type"] == "AngularCheckerboard":
        return AngularCheckerboard(d["k"], tuple(d["flipped"]), d.get("n", 2))
    raise ConfigError(f"unknown sigma pattern {d['type']!r}")


# ---------------------------------------------------------------------------
# kernel families
# ---------------------------------------------------------------------------


def _rows(x, n):
    a = np.asarray(x, dtype=float)
    return a.reshape(-1, n)


@dataclass(frozen=True)
class UniformBall:
    """rho(x, z) = |B_delta|^-1 on the ball of radius delta."""

    delta: float
    n: int

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")

    rho_family = True
    singular = False

    def support(self, x=None, domain=None):
        return geo.Ball((0.0,) * self.n, self.delta)

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        Z = _rows(Z, self.n)
        inside = np.linalg.norm(Z, axis=1) < self.delta
        return np.where(inside, 1.0 / ball_volume(self.n, self.delta), 0.0)

    def holder_norm(self, x, p: float) -> float:
        return 1.0 / ball_volume(self.n, self.delta)

    def to_dict(self) -> dict:
        return {"type": "UniformBall", "delta": self.delta, "n": self.n}


@dataclass(frozen=True)
class UniformAnnulus:
    """rho = |A|^-1 on the open annulus eps < ||z|| < delta."""

    eps: float
    delta: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.eps < self.delta:
            raise ConfigError("annulus needs 0 <= eps < delta")

    rho_family = True
    singular = False

    @property
    def volume(self) -> float:
        return ball_volume(self.n, self.delta) - ball_volume(self.n, self.eps)

    def support(self, x=None, domain=None):
        return geo.AnnulusAround(geo.Point((0.0,) * self.n), self.eps, self.delta)

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        r = np.linalg.norm(_rows(Z, self.n), axis=1)
        inside = (r > self.eps) & (r < self.delta)
        return np.where(inside, 1.0 / self.volume, 0.0)

    def holder_norm(self, x, p: float) -> float:
        return 1.0 / self.volume

    def to_dict(self) -> dict:
        return {"type": "UniformAnnulus", "eps": self.eps, "delta": self.delta, "n": self.n}


@dataclass(frozen=True)
class HalfBallCone:
    """Uniform kernel on the forward half ball B_delta ∩ {z.axis > 0}."""

    delta: float
    axis: tuple
    n: int = field(default=0)

    def __post_init__(self):
        axis = tuple(float(a) for a in np.atleast_1d(np.asarray(self.axis, dtype=float)))
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "n", len(axis))
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")
        nrm = math.sqrt(sum(a * a for a in axis))
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigError("half-ball axis must be unit-norm")

    rho_family = True
    singular = False

    @property
    def volume(self) -> float:
        return 0.5 * ball_volume(self.n, self.delta)

    def support(self, x=None, domain=None):
        zero = (0.0,) * self.n
        return geo.Intersection(
            (geo.Ball(zero, self.delta), geo.HalfSpace(zero, self.axis))
        )

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        Z = _rows(Z, self.n)
        inside = (np.linalg.norm(Z, axis=1) < self.delta) & (Z @ np.asarray(self.axis) > 0.0)
        return np.where(inside, 1.0 / self.volume, 0.0)

    def holder_norm(self, x, p: float) -> float:
        return 1.0 / self.volume

    def to_dict(self) -> dict:
        return {"type": "HalfBallCone", "delta": self.delta, "axis": list(self.axis),
                "n": self.n}


@dataclass(frozen=True)
class VariableHalfBall:
    """Mean-value kernel on a forward half ball whose radius varies with x.

    The radius profile is r(x) = delta * (c0 + c1 * x.axis) and the value
    is 1/|B_r(x) ∩ {z.axis > 0}|, so the kernel averages u over a
    measurable forward neighborhood that can shrink along the axis.
    """

    delta: float
    axis: tuple
    c0: float
    c1: float
    n: int = field(default=0)

    def __post_init__(self):
        axis = tuple(float(a) for a in np.atleast_1d(np.asarray(self.axis, dtype=float)))
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "n", len(axis))
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")
        if self.c0 <= 0.0:
            raise ConfigError("c0 must be positive")
        nrm = math.sqrt(sum(a * a for a in axis))
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigError("half-ball axis must be unit-norm")

    rho_family = True
    singular = False

    def radius_at(self, X) -> np.ndarray:
        X = _rows(X, self.n)
        return self.delta * (self.c0 + self.c1 * (X @ np.asarray(self.axis)))

    def support(self, x, domain=None):
        r = float(self.radius_at(x)[0])
        if r <= 0.0:
            raise ConfigError("support radius is not positive at this point")
        zero = (0.0,) * self.n
        return geo.Intersection(
            (geo.Ball(zero, r), geo.HalfSpace(zero, self.axis))
        )

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        X = _rows(X, self.n)
        Z = _rows(Z, self.n)
        r = self.radius_at(X)
        ok = (r > 0.0) & (np.linalg.norm(Z, axis=1) < r) & (Z @ np.asarray(self.axis) > 0.0)
        out = np.zeros(len(Z))
        out[ok] = 1.0 / (0.5 * ball_volume(self.n, 1.0) * r[ok] ** self.n)
        return out

    def holder_norm(self, x, p: float) -> float:
        r = float(self.radius_at(x)[0])
        return 1.0 / (0.5 * ball_volume(self.n, r))

    def to_dict(self) -> dict:
        return {"type": "VariableHalfBall", "delta": self.delta, "axis": list(self.axis),
                "c0": self.c0, "c1": self.c1, "n": self.n}


@dataclass(frozen=True)
class SignChanging:
    """Weakly singular radial kernel with an angular sign pattern.

    rho(x, z) = delta^alpha/(tau |B_delta|) * ((n-alpha)/n) * ||z||^-alpha
    * sigma(x, z/||z||) for 0 < ||z|| < delta. tau must equal the angular
    mean of sigma, so the kernel integrates to one over the ball.
    """

    delta: float
    alpha: float
    sigma: object
    tau: float
    n: int
    p: float = 2.0

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if abs(self.sigma.tau - self.tau) > 1e-12:
            raise ConfigError(
                f"declared tau {self.tau} does not match the pattern mean {self.sigma.tau}"
            )
        if self.alpha < 0.0:
            raise ConfigError("alpha must be >= 0")
        if self.p > 1.0:
            q = self.p / (self.p - 1.0)
            if self.alpha >= self.n / q:
                raise GateError("alpha < n/q", f"alpha={self.alpha}, n/q={self.n / q}")
        elif self.alpha > 0.0:
            raise GateError("alpha < n/q", "p=1 forces alpha = 0")

    rho_family = True

    @property
    def singular(self) -> bool:
        return self.alpha > 0.0 or not isinstance(self.sigma, ConstantOne)

    @property
    def prefactor(self) -> float:
        return (self.delta**self.alpha / (self.tau * ball_volume(self.n, self.delta))
                * (self.n - self.alpha) / self.n)

    def support(self, x=None, domain=None):
        zero = (0.0,) * self.n
        if self.singular:
            return geo.AnnulusAround(geo.Point(zero), 0.0, self.delta)
        return geo.Ball(zero, self.delta)

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        X = _rows(X, self.n)
        Z = _rows(Z, self.n)
        if len(X) == 1 and len(Z) > 1:
            X = np.repeat(X, len(Z), axis=0)
        r = np.linalg.norm(Z, axis=1)
        if self.singular and np.any(r == 0.0):
            raise ConfigError("singular kernel evaluated at z = 0; exclude the diagonal cell")
        inside = (r > 0.0) & (r < self.delta) if self.singular else (r < self.delta)
        out = np.zeros(len(Z))
        if np.any(inside):
            w = Z[inside] / r[inside, None]
            out[inside] = (self.prefactor * r[inside] ** (-self.alpha)
                           * self.sigma.eval_batch(X[inside], w))
        return out

    def ball_mass(self, radius: float) -> float:
        """Exact integral of rho over the ball of the given radius."""
        return (radius / self.delta) ** (self.n - self.alpha)

    def holder_norm(self, x, p: float) -> float:
        return r_zero(self.n, p, self.alpha) / (self.tau * ball_volume(self.n, self.delta))

    def to_dict(self) -> dict:
        return {"type": "SignChanging", "delta": self.delta, "alpha": self.alpha,
                "sigma": self.sigma.to_dict(), "tau": self.tau, "n": self.n, "p": self.p}


@dataclass(frozen=True)
class DistanceScaled:
    """mu(x, z) = delta(x)^-beta / |Omega ∩ B_delta(x)(x)| near a target.

    delta(x) = min(delta0, dist(x, Gamma)); the normalizer is the measure
    of the visible part of the ball, so the support is exactly
    (Omega ∩ B_delta(x)(x)) - x.
    """

    gamma: object
    beta: float
    delta0: float
    p: float
    n: int

    def __post_init__(self):
        if self.delta0 <= 0.0:
            raise ConfigError("delta0 must be positive")
        m = target_dimension(self.gamma)
        if self.beta <= self.n - m:
            raise GateError("beta > n - m", f"beta={self.beta}, n-m={self.n - m}")

    rho_family = False
    singular = False

    def delta_at(self, X) -> np.ndarray:
        X = _rows(X, self.n)
        return np.minimum(self.delta0, self.gamma.distance_batch(X))

    def support(self, x, domain=None):
        if domain is None:
            raise ConfigError("DistanceScaled support needs the domain")
        x = np.asarray(x, dtype=float).reshape(self.n)
        d = float(self.delta_at(x)[0])
        if d <= 0.0:
            raise ConfigError("support undefined on the target itself")
        return geo.Intersection(
            (geo.Ball((0.0,) * self.n, d), geo.Translate(domain.omega, tuple(-x)))
        )

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        if domain is None:
            raise ConfigError("DistanceScaled evaluation needs the domain")
        X = _rows(X, self.n)
        Z = _rows(Z, self.n)
        d = self.delta_at(X)
        inside = (np.linalg.norm(Z, axis=1) < d) & geo.contains(domain.omega, X + Z)
        if normalizer is None:
            normalizer = np.array([
                local_ball_measure(domain.omega, X[i], d[i]) for i in range(len(X))
            ])
        else:
            normalizer = np.asarray(normalizer, dtype=float).reshape(len(X))
        out = np.zeros(len(Z))
        ok = inside & (d > 0.0) & (normalizer > 0.0)
        out[ok] = d[ok] ** (-self.beta) / normalizer[ok]
        return out

    def to_dict(self) -> dict:
        return {"type": "DistanceScaled", "gamma": self.gamma.to_dict(), "beta": self.beta,
                "delta0": self.delta0, "p": self.p, "n": self.n}


@dataclass(frozen=True)
class InversePower:
    """mu(z) = ||z||^-p / |Z| on the annulus eps < ||z|| < delta."""

    eps: float
    delta: float
    p: float
    n: int

    def __post_init__(self):
        if self.eps <= 0.0:
            raise GateError("eps > 0", "singularity must be excluded")
        if self.delta <= self.eps:
            raise ConfigError("delta must exceed eps")

    rho_family = False
    singular = False

    @property
    def volume(self) -> float:
        return ball_volume(self.n, self.delta) - ball_volume(self.n, self.eps)

    def support(self, x=None, domain=None):
        return geo.AnnulusAround(geo.Point((0.0,) * self.n), self.eps, self.delta)

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        r = np.linalg.norm(_rows(Z, self.n), axis=1)
        inside = (r > self.eps) & (r < self.delta)
        out = np.zeros(len(r))
        out[inside] = r[inside] ** (-self.p) / self.volume
        return out

    def to_dict(self) -> dict:
        return {"type": "InversePower", "eps": self.eps, "delta": self.delta,
                "p": self.p, "n": self.n}


@dataclass(frozen=True)
class Laminate:
    """Two mirrored cone-sector kernels split across an interface.

    On the left of the interface the support is
    Z1 = {z in C_theta(0; e1): z1 < delta1, |z2| > delta2}; on the right
    it is -Z1. mu(x, z) = |z2|^-(p+1) / |Z1|. When a domain is supplied,
    pairs whose endpoint x + z lands outside Omega and its collar are
    dropped, so the support is clipped to the reachable set.
    """

    delta1: float
    delta2: float
    theta: float
    p: float
    interface: float = 1.0

    n = 2
    rho_family = False
    singular = False

    def __post_init__(self):
        if not 0.0 < self.theta <= math.pi / 4.0:
            raise GateError("0 < theta <= pi/4", f"theta={self.theta}")
        if not 0.0 < self.delta2 < self.delta1 * math.sin(self.theta):
            raise GateError("0 < delta2 < delta1*sin(theta)",
                            f"delta1={self.delta1}, delta2={self.delta2}")

    @property
    def z1_volume(self) -> float:
        t = math.tan(self.theta)
        return (self.delta1 * t - self.delta2) ** 2 / t

    def _in_z1(self, Z: np.ndarray, flip: bool) -> np.ndarray:
        z1 = -Z[:, 0] if flip else Z[:, 0]
        z2 = Z[:, 1]
        cone = z1 > math.cos(self.theta) * np.linalg.norm(Z, axis=1)
        return cone & (z1 < self.delta1) & (np.abs(z2) > self.delta2)

    def support(self, x, domain=None):
        x = np.asarray(x, dtype=float).reshape(2)
        flip = x[0] > self.interface
        sgn = -1.0 if flip else 1.0
        zero = (0.0, 0.0)
        t = math.tan(self.theta)
        bounds = ((min(0.0, sgn * self.delta1), -self.delta1 * t),
                  (max(0.0, sgn * self.delta1), self.delta1 * t))
        cone = geo.Cone(zero, (sgn, 0.0), self.theta, bounds=bounds)
        cap = geo.HalfSpace((sgn * self.delta1, 0.0), (-sgn, 0.0))
        gap = geo.Union((geo.HalfSpace((0.0, self.delta2), (0.0, 1.0)),
                         geo.HalfSpace((0.0, -self.delta2), (0.0, -1.0))))
        parts = [cone, cap, gap]
        if domain is not None:
            reach = domain.omega
            if not domain.gamma_is_target():
                reach = geo.Union((domain.omega, domain.gamma))
            parts.append(geo.Translate(reach, tuple(-x)))
        return geo.Intersection(tuple(parts))

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        X = _rows(X, 2)
        Z = _rows(Z, 2)
        flip = X[:, 0] > self.interface
        inside = np.where(flip, self._in_z1(Z, True), self._in_z1(Z, False))
        if domain is not None:
            Y = X + Z
            reach = geo.contains(domain.omega, Y)
            if not domain.gamma_is_target():
                reach |= geo.contains(domain.gamma, Y)
            inside &= reach
        out = np.zeros(len(Z))
        out[inside] = np.abs(Z[inside, 1]) ** (-(self.p + 1.0)) / self.z1_volume
        return out

    def to_dict(self) -> dict:
        return {"type": "Laminate", "delta1": self.delta1, "delta2": self.delta2,
                "theta": self.theta, "p": self.p, "interface": self.interface}


@dataclass(frozen=True)
class FlowScaled:
    """Inverse-power kernel on a flow-scaled shell Z(x) = c(x) * Phi.

    c(x) = c0 + c1 (x.e); Phi is the shell phi_inner < ||zeta|| < phi_outer,
    optionally restricted to the forward side {zeta.e > 0}.
    mu(x, z) = (lambda0/|Phi|) ||z||^-p on Z(x).
    """

    c0: float
    c1: float
    e: tuple
    phi_inner: float
    phi_outer: float
    p: float
    n: int = field(default=0)
    one_sided: bool = True
    lambda0: float = 1.0

    def __post_init__(self):
        e = tuple(float(a) for a in np.atleast_1d(np.asarray(self.e, dtype=float)))
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "n", len(e))
        nrm = math.sqrt(sum(a * a for a in e))
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigError("direction e must be unit-norm")
        if not 0.0 < self.phi_inner < self.phi_outer:
            raise GateError("0 not in closure(Phi)", "phi_inner must be positive")

    rho_family = False
    singular = False

    @property
    def phi_volume(self) -> float:
        shell = ball_volume(self.n, self.phi_outer) - ball_volume(self.n, self.phi_inner)
        return 0.5 * shell if self.one_sided else shell

    def scale_at(self, X) -> np.ndarray:
        X = _rows(X, self.n)
        return self.c0 + self.c1 * (X @ np.asarray(self.e))

    def phi_region(self):
        zero = (0.0,) * self.n
        shell = geo.AnnulusAround(geo.Point(zero), self.phi_inner, self.phi_outer)
        if self.one_sided:
            return geo.Intersection((shell, geo.HalfSpace(zero, self.e)))
        return shell

    def support(self, x, domain=None):
        c = float(self.scale_at(x)[0])
        if c <= 0.0:
            raise ConfigError("nonpositive flow scale at x")
        zero = (0.0,) * self.n
        shell = geo.AnnulusAround(geo.Point(zero), c * self.phi_inner, c * self.phi_outer)
        if self.one_sided:
            return geo.Intersection((shell, geo.HalfSpace(zero, self.e)))
        return shell

    def eval_batch(self, X, Z, domain=None, normalizer=None) -> np.ndarray:
        X = _rows(X, self.n)
        Z = _rows(Z, self.n)
        c = self.scale_at(X)
        r = np.linalg.norm(Z, axis=1)
        inside = (r > c * self.phi_inner) & (r < c * self.phi_outer) & (c > 0.0)
        if self.one_sided:
            inside &= Z @ np.asarray(self.e) > 0.0
        out = np.zeros(len(Z))
        out[inside] = (self.lambda0 / self.phi_volume) * r[inside] ** (-self.p)
        return out

    def to_dict(self) -> dict:
        return {"type": "FlowScaled", "c0": self.c0, "c1": self.c1, "e": list(self.e),
                "phi_inner": self.phi_inner, "phi_outer": self.phi_outer, "p": self.p,
                "n": self.n, "one_sided": self.one_sided, "lambda0": self.lambda0}


_KERNELS = {cls.__name__: cls for cls in
            (UniformBall, UniformAnnulus, HalfBallCone, VariableHalfBall, SignChanging,
             DistanceScaled, InversePower, Laminate, FlowScaled)}


def kernel_from_dict(d: dict):
    kind = d.get("type")
    if kind not in _KERNELS:
        raise ConfigError(f"unknown kernel type {kind!r}")
    d = dict(d)
    d.pop("type")
    if kind == "SignChanging":
        d["sigma"] = sigma_from_dict(d["sigma"])
    if kind == "DistanceScaled":
        d["gamma"] = geo.from_dict(d["gamma"])
    if kind in ("HalfBallCone", "VariableHalfBall", "FlowScaled"):
        d.pop("n", None)  # recomputed from the axis
    return _KERNELS[kind](**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


# ---------------------------------------------------------------------------
# helpers and checks
# ---------------------------------------------------------------------------


def target_dimension(target) -> int:
    """Hausdorff dimension of a distance target."""
    if isinstance(target, geo.Point):
        return 0
    if isinstance(target, (geo.Segment, geo.Circle)):
        return 1
    if isinstance(target, geo.HyperplaneH):
        return target.m
    if isinstance(target, geo.BoxBoundaryFace):
        return target.n - 1
    raise ConfigError(f"no dimension rule for {type(target).__name__}")


def local_ball_measure(omega, x, radius: float, resolution: int = 48) -> float:
    """|Omega ∩ B_radius(x)| by stratified cell fractions around x."""
    if radius <= 0.0:
        return 0.0
    x = np.asarray(x, dtype=float).ravel()
    n = len(x)
    dims = (resolution,) * n
    h = 2.0 * radius / resolution
    grid = geo.Grid(tuple(x - radius), h, dims)
    region = geo.Intersection((geo.Ball(tuple(x), radius), omega))
    frac = geo.cell_mask(grid, region, subsample=2)
    return float(frac.sum() * grid.cell_volume)


def local_ball_measures(omega, X, radii, resolution: int = 48) -> np.ndarray:
    """Row-wise |Omega ∩ B_r(x)|, exact for balls wholly inside a box.

    Balls that may cross the boundary of Omega fall back to the stratified
    quadrature of local_ball_measure.
    """
    X = np.asarray(X, dtype=float)
    r = np.asarray(radii, dtype=float).reshape(len(X))
    n = X.shape[1]
    out = np.empty(len(X))
    interior = np.zeros(len(X), dtype=bool)
    if isinstance(omega, geo.Box):
        lo = np.asarray(omega.lo, dtype=float)
        hi = np.asarray(omega.hi, dtype=float)
        interior = (np.all(X - r[:, None] >= lo, axis=1)
                    & np.all(X + r[:, None] <= hi, axis=1)
                    & (r > 0.0))
        out[interior] = ball_volume(n, 1.0) * r[interior] ** n
    for i in np.flatnonzero(~interior):
        out[i] = local_ball_measure(omega, X[i], r[i], resolution=resolution)
    return out


def eval_kernel(kernel, x, z, domain=None):
    """Scalar convenience wrapper over eval_batch."""
    X = np.asarray(x, dtype=float).reshape(1, -1)
    Z = np.asarray(z, dtype=float).reshape(1, -1)
    return float(kernel.eval_batch(X, Z, domain=domain)[0])


def _z_grid(kernel, x, h: float, domain=None):
    """Grid over the support bounding box with z=0 at a cell center."""
    sup = kernel.support(x, domain=domain)
    b = sup.bbox()
    if b is None:
        raise ConfigError("kernel support lacks a finite bounding box")
    lo, hi = b
    n = kernel.n
    m_lo = np.ceil(-lo / h - 0.5).astype(int)
    m_hi = np.ceil(hi / h - 0.5).astype(int)
    dims = tuple(int(a + b + 1) for a, b in zip(m_lo, m_hi))
    origin = tuple(-(m + 0.5) * h for m in m_lo)
    return geo.Grid(origin, h, dims), sup


def normalize_check(kernel, x, h: float, domain=None, subsample: int = 8) -> float:
    """Quadrature of a rho-family kernel over its support; should be ~1.

    The origin cell is handled with the exact radial ball mass for the
    weakly singular family (equal-volume radius), and by direct
    evaluation otherwise.
    """
    if not kernel.rho_family:
        raise ConfigError("normalize_check applies to normalized (rho) families only")
    if h <= 0.0:
        raise ConfigError("resolution h must be positive")
    grid, _ = _z_grid(kernel, x, h, domain=domain)
    n = kernel.n
    s = subsample
    offs = (np.arange(s) + 0.5) / s * h
    local = np.stack(np.meshgrid(*([offs] * n), indexing="ij"), axis=-1).reshape(-1, n)
    centers = grid.centers()
    corners = centers - 0.5 * h
    origin_cell = int(np.argmin(np.linalg.norm(centers, axis=1)))
    keep = np.ones(len(centers), dtype=bool)
    analytic_origin = isinstance(kernel, SignChanging)
    if analytic_origin:
        keep[origin_cell] = False
    x_row = np.asarray(x, dtype=float).reshape(1, -1)
    weight = (h / s) ** n
    total = 0.0
    idx = np.flatnonzero(keep)
    block = max(1, (1 << 18) // len(local))
    for i0 in range(0, len(idx), block):
        sel = idx[i0:i0 + block]
        pts = (corners[sel][:, None, :] + local[None, :, :]).reshape(-1, n)
        X = np.repeat(x_row, len(pts), axis=0)
        total += float(kernel.eval_batch(X, pts, domain=domain).sum()) * weight
    if analytic_origin:
        # exact radial mass of the equal-volume ball replaces the cell
        # holding the (weak) singularity
        r_eq = (grid.cell_volume / ball_volume(n)) ** (1.0 / n)
        total += kernel.ball_mass(min(r_eq, kernel.delta))
    return total


def holder_norm_R(kernel, x, p: float, h: float = None, domain=None) -> float:
    """Dual-exponent norm R(x) of a kernel's z-section.

    Closed forms for the uniform families and the sign-changing family;
    grid quadrature otherwise. For p = 1 this is the essential sup.
    """
    if p < 1.0:
        raise GateError("p >= 1", f"p={p}")
    if hasattr(kernel, "holder_norm"):
        return kernel.holder_norm(x, p)
    grid, sup = _z_grid(kernel, x, h or _default_h(kernel, x, domain), domain=domain)
    frac = geo.cell_mask(grid, sup, subsample=2)
    centers = grid.centers()
    mask = frac > 0.0
    origin_cell = int(np.argmin(np.linalg.norm(centers, axis=1)))
    if getattr(kernel, "singular", False):
        mask[origin_cell] = False
    X = np.repeat(np.asarray(x, dtype=float).reshape(1, -1), len(centers), axis=0)
    vals = np.abs(kernel.eval_batch(X[mask], centers[mask], domain=domain))
    if p == 1.0:
        return float(vals.max(initial=0.0))
    q = p / (p - 1.0)
    integral = float(np.sum(vals**q * frac[mask] * grid.cell_volume))
    return integral ** (p - 1.0)


def _default_h(kernel, x, domain):
    b = kernel.support(x, domain=domain).bbox()
    if b is None:
        raise ConfigError("kernel support lacks a finite bounding box")
    return float(np.max(b[1] - b[0])) / 64.0
