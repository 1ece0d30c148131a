"""Weight functions and the reverse-Jensen verifier.

The verifier measures nu_emp = max_y [integral of R*gamma over the
preimage of y] / gamma(y) and compares it against a declared nu. The
preimage is integrated by cell quadrature over an enclosing region,
refined by the membership indicator, which can only overestimate — a
conservative direction for a pass.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .constants import ball_volume
from .errors import ConfigError, GateError

WEIGHTS_SCHEMA = "weights_v1"


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineDrift:
    """gamma(x) = c + x.e"""

    e: tuple
    c: float

    def __post_init__(self):
        object.__setattr__(self, "e", tuple(float(a) for a in np.atleast_1d(self.e)))

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, len(self.e))
        return self.c + X @ np.asarray(self.e)

    def to_dict(self) -> dict:
        return {"type": "AffineDrift", "e": list(self.e), "c": self.c}


@dataclass(frozen=True)
class QuadraticCap:
    """gamma(x) = D^2 - ||x - x0||^2"""

    x0: tuple
    D: float

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(a) for a in np.atleast_1d(self.x0)))
        if self.D <= 0.0:
            raise ConfigError("cap radius D must be positive")

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, len(self.x0))
        return self.D**2 - np.sum((X - np.asarray(self.x0)) ** 2, axis=1)

    def to_dict(self) -> dict:
        return {"type": "QuadraticCap", "x0": list(self.x0), "D": self.D}


@dataclass(frozen=True)
class ConstantOne:
    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.ones(X.shape[0])

    def to_dict(self) -> dict:
        return {"type": "ConstantOne"}


@dataclass(frozen=True)
class DistancePower:
    """gamma(x) = (r0 / dist(x, Gamma))^beta; diverges on Gamma."""

    gamma: object
    beta: float
    r0: float

    def __post_init__(self):
        if self.beta <= 0.0 or self.r0 <= 0.0:
            raise ConfigError("distance-power weight needs beta > 0 and r0 > 0")

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.gamma.n)
        d = self.gamma.distance_batch(X)
        if np.any(d == 0.0):
            raise ConfigError("weight pole: point lies on the target set")
        return (self.r0 / d) ** self.beta

    def to_dict(self) -> dict:
        return {"type": "DistancePower", "gamma": self.gamma.to_dict(),
                "beta": self.beta, "r0": self.r0}


_WEIGHTS = {cls.__name__: cls for cls in (AffineDrift, QuadraticCap, ConstantOne,
                                          DistancePower)}


def weight_from_dict(d: dict):
    kind = d.get("type")
    if kind not in _WEIGHTS:
        raise ConfigError(f"unknown weight type {kind!r}")
    d = dict(d)
    d.pop("type")
    if kind == "DistancePower":
        d["gamma"] = geo.from_dict(d["gamma"])
    if kind == "AffineDrift":
        d["e"] = tuple(d["e"])
    if kind == "QuadraticCap":
        d["x0"] = tuple(d["x0"])
    return _WEIGHTS[kind](**d)


def eval_weight(weight, x):
    """Scalar wrapper; raises at a pole."""
    vals = weight.eval_batch(np.atleast_2d(np.asarray(x, dtype=float)))
    return float(vals[0])


# ---------------------------------------------------------------------------
# correspondences with usable inverses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForwardHalfBall:
    """Psi(x) = B_delta(x) ∩ {y : (y-x).omega > 0}; inverse is the
    backward half ball intersected with Omega (analytic)."""

    delta: float
    omega: tuple

    def __post_init__(self):
        axis = tuple(float(a) for a in np.atleast_1d(self.omega))
        object.__setattr__(self, "omega", axis)
        nrm = math.sqrt(sum(a * a for a in axis))
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigError("half-ball axis must be unit-norm")
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")

    @property
    def n(self) -> int:
        return len(self.omega)

    def psi_contains(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        v = np.asarray(y, dtype=float) - X
        return (np.linalg.norm(v, axis=1) < self.delta) & (v @ np.asarray(self.omega) > 0.0)

    def inverse_region(self, y, domain):
        y = tuple(float(a) for a in np.atleast_1d(y))
        back = geo.HalfSpace(y, tuple(-a for a in self.omega))
        return geo.Intersection((geo.Ball(y, self.delta), back, domain.omega))

    def psi_measure(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        return np.full(len(X), 0.5 * ball_volume(self.n, self.delta))

    def ladder_scale(self) -> float:
        return self.delta

    def to_dict(self) -> dict:
        return {"type": "ForwardHalfBall", "delta": self.delta, "omega": list(self.omega)}


@dataclass(frozen=True)
class FullBall:
    """Psi(x) = B_delta(x) ∩ Omega; the inverse is B_delta(y) ∩ Omega."""

    delta: float
    n_dim: int

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")

    @property
    def n(self) -> int:
        return self.n_dim

    def psi_contains(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        return np.linalg.norm(np.asarray(y, dtype=float) - X, axis=1) < self.delta

    def inverse_region(self, y, domain):
        y = tuple(float(a) for a in np.atleast_1d(y))
        return geo.Intersection((geo.Ball(y, self.delta), domain.omega))

    def psi_measure(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        return np.full(len(X), ball_volume(self.n, self.delta))

    def ladder_scale(self) -> float:
        return self.delta

    def to_dict(self) -> dict:
        return {"type": "FullBall", "delta": self.delta, "n_dim": self.n_dim}


@dataclass(frozen=True)
class ConeTube:
    """Psi(x) = Omega ∩ {dist(y,Gamma) < b*dist(x,Gamma)} ∩ C_theta(x; toward Gamma).

    The preimage of y is enclosed in the annulus dist(x,Gamma) > dist(y,Gamma)/b.
    """

    b: float
    theta: float
    gamma: object

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise GateError("0 < b < 1", f"b={self.b}")
        if not 0.0 < self.theta < math.pi / 2.0:
            raise ConfigError("theta must lie in (0, pi/2)")

    @property
    def n(self) -> int:
        return self.gamma.n

    def psi_contains(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        y = np.asarray(y, dtype=float)
        dx = self.gamma.distance_batch(X)
        dy = float(self.gamma.distance_batch(y.reshape(1, -1))[0])
        ok = dx > 0.0
        proj = self.gamma.projection_batch(X)
        w = np.zeros_like(X)
        w[ok] = (proj[ok] - X[ok]) / dx[ok, None]
        v = y - X
        vn = np.linalg.norm(v, axis=1)
        cone = np.einsum("ij,ij->i", v, w) > math.cos(self.theta) * vn
        return ok & (dy < self.b * dx) & cone

    def inverse_region(self, y, domain):
        y = np.asarray(y, dtype=float)
        dy = float(self.gamma.distance_batch(y.reshape(1, -1))[0])
        lo, hi = domain.box()
        r_max = float(np.linalg.norm(hi - lo)) + dy
        inner = dy / self.b
        if inner >= r_max:
            return None
        return geo.Intersection(
            (geo.AnnulusAround(self.gamma, inner, r_max), domain.omega)
        )

    def ladder_scale(self) -> float:
        return 1.0

    def to_dict(self) -> dict:
        return {"type": "ConeTube", "b": self.b, "theta": self.theta,
                "gamma": self.gamma.to_dict()}


@dataclass(frozen=True)
class BallCap:
    """Psi(x) = B_{b*dist(x,Gamma)}(x) ∩ {dist(y,Gamma) < dist(x,Gamma)}.

    Distance-shrinking: Psi(x) ⊆ B_{dist(x,Gamma)}(x). The preimage of y
    sits inside the annulus dist(y,Gamma) < dist(x,Gamma) < dist(y,Gamma)/(1-b).
    """

    b: float
    gamma: object

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise GateError("0 < b < 1", f"b={self.b}")

    @property
    def n(self) -> int:
        return self.gamma.n

    def psi_contains(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        y = np.asarray(y, dtype=float)
        dx = self.gamma.distance_batch(X)
        dy = float(self.gamma.distance_batch(y.reshape(1, -1))[0])
        near = np.linalg.norm(y - X, axis=1) < self.b * dx
        return near & (dy < dx)

    def inverse_region(self, y, domain):
        y = np.asarray(y, dtype=float)
        dy = float(self.gamma.distance_batch(y.reshape(1, -1))[0])
        if dy == 0.0:
            return None
        return geo.Intersection(
            (geo.AnnulusAround(self.gamma, dy, dy / (1.0 - self.b)), domain.omega)
        )

    def psi_measure(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        d = self.gamma.distance_batch(X)
        return 0.5 * ball_volume(self.n) * (self.b * d) ** self.n

    def ladder_scale(self) -> float:
        return 1.0

    def to_dict(self) -> dict:
        return {"type": "BallCap", "b": self.b, "gamma": self.gamma.to_dict()}


_CORRS = {cls.__name__: cls for cls in (ForwardHalfBall, FullBall, ConeTube, BallCap)}


def corr_from_dict(d: dict):
    kind = d.get("type")
    if kind not in _CORRS:
        raise ConfigError(f"unknown correspondence type {kind!r}")
    d = dict(d)
    d.pop("type")
    if "gamma" in d:
        d["gamma"] = geo.from_dict(d["gamma"])
    if "omega" in d:
        d["omega"] = tuple(d["omega"])
    return _CORRS[kind](**d)


# ---------------------------------------------------------------------------
# reverse-Jensen verification
# ---------------------------------------------------------------------------


def _y_samples(domain, count, ladder_scale, gamma_target):
    """Stratified interior points plus a geometric ladder toward Gamma."""
    b = domain.omega.bbox()
    lo, hi = b if b is not None else domain.box()
    n = len(lo)
    per_axis = max(2, int(round(count ** (1.0 / n))))
    axes = [lo[i] + (np.arange(per_axis) + 0.5) / per_axis * (hi[i] - lo[i])
            for i in range(n)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    keep = geo.contains(domain.omega, pts)
    if gamma_target is not None:
        keep &= gamma_target.distance_batch(pts) > 1e-9
    pts = pts[keep]
    ladder = []
    if gamma_target is not None:
        # walk from the target toward an interior reference point
        interior = pts[np.argmax(gamma_target.distance_batch(pts))]
        proj = gamma_target.projection_batch(interior.reshape(1, -1))[0]
        u = interior - proj
        nrm = np.linalg.norm(u)
        if nrm > 0:
            u = u / nrm
            for j in range(1, 7):
                cand = proj + (2.0**-j) * ladder_scale * u
                if geo.contains(domain.omega, cand):
                    ladder.append(cand)
    if ladder:
        pts = np.vstack([pts, np.array(ladder)])
    return pts


def _quad_patches(enclosing):
    """Split an annulus-led intersection into dyadic shells.

    Power-law integrands pile up near the annulus inner radius;
    shell-by-shell grids keep the cell size proportional to the local
    radius. Anything else integrates as a single patch.
    """
    if not isinstance(enclosing, geo.Intersection):
        return [enclosing]
    head, rest = enclosing.parts[0], enclosing.parts[1:]
    if not isinstance(head, geo.AnnulusAround) or head.outer <= 2.0 * head.inner \
            or head.inner == 0.0:
        return [enclosing]
    patches = []
    r = head.inner
    while r < head.outer:
        r_next = min(2.0 * r, head.outer)
        shell = geo.AnnulusAround(head.target, r, r_next)
        patches.append(geo.Intersection((shell,) + rest))
        r = r_next
    return patches


def reverse_jensen_check(weight, corr, r_field, domain, nu, y_samples=64,
                         quad_resolution=64, tol=0.02, gamma_target=None) -> dict:
    """Empirical check of the weighted reverse-Jensen condition.

    Parameters
    ----------
    weight : WeightSpec
    corr : correspondence with psi_contains and inverse_region
    r_field : callable mapping points (m, n) to R values (m,)
    domain : DomainConfig
    nu : float
        Declared contraction constant in (0, 1) — or any positive bound
        the caller wants verified.
    y_samples : int
        Target number of stratified y points.
    quad_resolution : int
        Cells per axis for the preimage quadrature.
    tol : float
        Relative pass tolerance.
    gamma_target : DistanceTarget, optional
        Target used for the pole ladder (defaults to the weight's own
        target when it has one).

    Returns
    -------
    dict
        {"nu_emp", "worst_y", "samples", "resolution", "pass"}
    """
    if gamma_target is None and isinstance(weight, DistancePower):
        gamma_target = weight.gamma
    ys = _y_samples(domain, y_samples, corr.ladder_scale(), gamma_target)
    if len(ys) == 0:
        raise ConfigError("no admissible y samples inside omega")
    nu_emp = -math.inf
    worst = None
    for y in ys:
        enclosing = corr.inverse_region(y, domain)
        if enclosing is None:
            continue
        if enclosing.bbox() is None:
            raise ConfigError("preimage enclosure is unbounded")
        integral = 0.0
        for patch in _quad_patches(enclosing):
            lo, hi = patch.bbox()
            extent = np.asarray(hi) - np.asarray(lo)
            if np.any(extent <= 0.0):
                continue
            h = float(extent.max()) / quad_resolution
            axes = [np.asarray(lo)[i]
                    + (np.arange(max(1, int(math.ceil(extent[i] / h)))) + 0.5) * h
                    for i in range(domain.n)]
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.n)
            member = geo.contains(patch, pts)
            if np.any(member):
                member[member] &= corr.psi_contains(pts[member], y)
            if np.any(member):
                kept = pts[member]
                integral += float(np.sum(r_field(kept) * weight.eval_batch(kept))
                                  * h**domain.n)
        g_y = float(weight.eval_batch(y.reshape(1, -1))[0])
        ratio = integral / g_y
        if ratio > nu_emp:
            nu_emp = ratio
            worst = y
    result = {
        "nu_emp": float(nu_emp),
        "worst_y": [float(v) for v in np.atleast_1d(worst)] if worst is not None else None,
        "samples": int(len(ys)),
        "resolution": int(quad_resolution),
        "pass": bool(nu_emp <= nu * (1.0 + tol)),
    }
    return result


# ---------------------------------------------------------------------------
# lower-dimensional constants
# ---------------------------------------------------------------------------


def sphere_surface(k: int) -> float:
    """(k-1)-measure of the unit sphere in R^k."""
    if k < 1:
        raise ConfigError("sphere dimension must be >= 1")
    return k * ball_volume(k)


def dist_class_bound(a, b, alpha1, alpha2, beta, K1, K2, K3, n=None) -> float:
    """Contraction bound K1*K2*K3 * b^(beta - alpha2) / alpha1."""
    if not 0.0 < a < b <= 1.0:
        raise GateError("0 < a < b <= 1", f"a={a}, b={b}")
    if alpha1 < 1.0:
        raise GateError("alpha1 >= 1", f"alpha1={alpha1}")
    if n is not None and alpha1 > n:
        raise GateError("alpha1 <= n", f"alpha1={alpha1}, n={n}")
    if alpha2 < 0.0:
        raise GateError("alpha2 >= 0", f"alpha2={alpha2}")
    if beta < alpha2:
        raise GateError("beta >= alpha2", f"beta={beta}, alpha2={alpha2}")
    return K1 * K2 * K3 * b ** (beta - alpha2) / alpha1


def lowdim_K4(m: int, n: int, theta: float, c_estimate: float) -> float:
    """Constant K4 = (2^m tan^m(theta)/c) * |B_1^m| * |S_1^(n-m)|."""
    if not 0 <= m <= n - 1:
        raise GateError("0 <= m <= n-1", f"m={m}, n={n}")
    if not 0.0 < theta < math.pi / 2.0:
        raise GateError("theta in (0, pi/2)", f"theta={theta}")
    if c_estimate <= 0.0:
        raise GateError("c_estimate > 0", f"c={c_estimate}")
    return (2.0**m * math.tan(theta) ** m / c_estimate) * ball_volume(m) \
        * sphere_surface(n - m)
