"""Named example configurations wiring domains, kernels, and bounds.

Each entry pins one verifiable inequality setup: the domain with its
constraint collar, the kernel, the expected constant (as a named bound
request so the factor breakdown stays inspectable), the default grid,
and optional flow / reverse-Jensen blocks. Every entry re-validates its
gate conditions at load; a registry that imports is a registry whose
examples are all admissible.

The --grid knob counts cells across Omega along axis 0; the enclosing
grid box is scaled accordingly, so refining keeps Omega boundaries on
cell edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import constants as cst
from . import discrete as disc
from . import dynamics as dyn
from . import geometry as geo
from . import kernels as ker
from . import weights as wts
from .errors import ConfigError, GateError

REGISTRY_SCHEMA = "registry_v1"


@dataclass(frozen=True)
class ConstantRequest:
    """A named closed-form bound together with its parameters."""

    name: str
    params: dict

    def evaluate(self) -> dict:
        return cst.example_bounds(self.name, **self.params)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class ExampleConfig:
    """One registered inequality setup, ready to assemble at any grid.

    constant may be None: the inequality then has no pinned constant and
    verification reports the raw ratio instead of a pass/fail bound.
    """

    name: str
    domain: geo.DomainConfig
    kernel: object
    p: float
    grid_lo: tuple
    grid_hi: tuple
    omega_span: float
    omega_cells: int
    constant: ConstantRequest = None
    weight: object = None
    scale: float = 1.0
    flow: object = None
    phi_region: object = None
    absorbing: object = None
    family: str = "sine"
    family_args: dict = field(default_factory=dict)
    tol: float = 0.05
    subsample: int = 4
    jensen: dict = None
    notes: str = ""

    @property
    def route(self) -> str:
        return "gradient" if getattr(self.kernel, "rho_family", False) else "form"

    def grid_cells0(self, n: int = None) -> int:
        n = self.omega_cells if n is None else int(n)
        if n < 1:
            raise ConfigError("grid resolution must be >= 1")
        span0 = self.grid_hi[0] - self.grid_lo[0]
        cells0 = n * span0 / self.omega_span
        if abs(cells0 - round(cells0)) > 1e-9:
            raise ConfigError(
                f"grid {n} does not tile the enclosing box of {self.name}; "
                f"axis-0 span ratio is {span0 / self.omega_span}"
            )
        return int(round(cells0))

    def build_grid(self, n: int = None) -> geo.Grid:
        return disc.make_grid(self.grid_lo, self.grid_hi, self.grid_cells0(n))

    def assemble(self, grid: geo.Grid):
        """Operator matrix or form evaluator for this entry on the grid."""
        if self.route == "gradient":
            weight = self.weight if self.weight is not None else wts.ConstantOne()
            return disc.assemble_gradient(self.kernel, weight, grid, self.domain,
                                          self.p, scale=self.scale,
                                          subsample=self.subsample)
        return disc.assemble_form(self.kernel, grid, self.domain, self.p,
                                  subsample=self.subsample)

    def fields(self, grid: geo.Grid, count: int, seed: int) -> list:
        kwargs = dict(self.family_args)
        if self.family == "distance":
            kwargs.setdefault("p", self.p)
        return disc.test_functions(grid, self.domain, count=count, seed=seed,
                                   family=self.family, **kwargs)

    def validate(self) -> None:
        """Re-fire every gate this entry depends on."""
        if self.constant is not None:
            self.constant.evaluate()
        self.build_grid()
        if self.flow is not None and self.phi_region is not None:
            dyn.check_phi(self.flow, self.phi_region)
        if self.jensen is not None:
            blk = self.jensen
            wts.weight_from_dict(blk["weight"])
            wts.corr_from_dict(blk["corr"])
            if not 0.0 < float(blk["nu"]):
                raise GateError("nu > 0", f"nu={blk['nu']}")

    def to_dict(self) -> dict:
        out = {
            "schema": REGISTRY_SCHEMA,
            "name": self.name,
            "domain": self.domain.to_dict(),
            "kernel": self.kernel.to_dict(),
            "p": self.p,
            "grid_lo": list(self.grid_lo),
            "grid_hi": list(self.grid_hi),
            "omega_span": self.omega_span,
            "omega_cells": self.omega_cells,
            "scale": self.scale,
            "family": self.family,
            "family_args": dict(self.family_args),
            "tol": self.tol,
            "subsample": self.subsample,
            "notes": self.notes,
        }
        out["constant"] = None if self.constant is None else self.constant.to_dict()
        out["weight"] = None if self.weight is None else self.weight.to_dict()
        out["flow"] = None if self.flow is None else self.flow.to_dict()
        out["phi_region"] = (None if self.phi_region is None
                             else self.phi_region.to_dict())
        out["absorbing"] = None if self.absorbing is None else self.absorbing.to_dict()
        out["jensen"] = None if self.jensen is None else dict(self.jensen)
        return out


def config_from_dict(d: dict) -> ExampleConfig:
    if d.get("schema") not in (None, REGISTRY_SCHEMA):
        raise ConfigError(f"unknown config schema {d.get('schema')!r}")
    req = d.get("constant")
    cfg = ExampleConfig(
        name=d["name"],
        domain=geo.domain_from_dict(d["domain"]),
        kernel=ker.kernel_from_dict(d["kernel"]),
        p=float(d["p"]),
        grid_lo=tuple(d["grid_lo"]),
        grid_hi=tuple(d["grid_hi"]),
        omega_span=float(d["omega_span"]),
        omega_cells=int(d["omega_cells"]),
        constant=None if req is None else ConstantRequest(req["name"],
                                                          dict(req["params"])),
        weight=None if d.get("weight") is None else wts.weight_from_dict(d["weight"]),
        scale=float(d.get("scale", 1.0)),
        flow=None if d.get("flow") is None else dyn.flow_from_dict(d["flow"]),
        phi_region=(None if d.get("phi_region") is None
                    else geo.from_dict(d["phi_region"])),
        absorbing=(None if d.get("absorbing") is None
                   else geo.from_dict(d["absorbing"])),
        family=d.get("family", "sine"),
        family_args=dict(d.get("family_args", {})),
        tol=float(d.get("tol", 0.05)),
        subsample=int(d.get("subsample", 4)),
        jensen=None if d.get("jensen") is None else dict(d["jensen"]),
        notes=d.get("notes", ""),
    )
    cfg.validate()
    return cfg


def with_overrides(cfg: ExampleConfig, grid: int = None, p: float = None,
                   tol: float = None) -> ExampleConfig:
    """Copy with CLI-style overrides applied; flags win over stored values."""
    changes = {}
    if grid is not None:
        changes["omega_cells"] = int(grid)
    if p is not None and float(p) != cfg.p:
        if cfg.constant is not None and "p" in cfg.constant.params:
            params = dict(cfg.constant.params)
            params["p"] = float(p)
            changes["constant"] = ConstantRequest(cfg.constant.name, params)
        kd = cfg.kernel.to_dict()
        if "p" in kd:
            # kernels that bake the exponent in must be rebuilt with it
            kd["p"] = float(p)
            changes["kernel"] = ker.kernel_from_dict(kd)
        changes["p"] = float(p)
    if tol is not None:
        changes["tol"] = float(tol)
    out = replace(cfg, **changes) if changes else cfg
    out.validate()
    return out


# ---------------------------------------------------------------------------
# entry builders
# ---------------------------------------------------------------------------


def _frame(lo, hi, inner) -> geo.Complement:
    """Box minus an inner region: the constraint collar around it."""
    return geo.Complement(inner, (lo, hi))


def _basic_ex1_1d() -> ExampleConfig:
    omega = geo.Box((0.0,), (1.0,))
    domain = geo.DomainConfig(omega, geo.Box((1.0,), (1.5,)),
                              bounds=((0.0,), (1.5,)))
    delta = 0.5
    jensen = {
        "corr": wts.ForwardHalfBall(delta, (1.0,)).to_dict(),
        "weight": wts.AffineDrift((1.0,), 1.0).to_dict(),
        "r": {"kind": "const", "value": 1.0 / delta},
        "nu": 1.0 - delta / 4.0,
        "y_samples": 64,
        "quad_resolution": 256,
    }
    return ExampleConfig(
        name="basic-ex1-1d",
        domain=domain,
        kernel=ker.HalfBallCone(delta, (1.0,)),
        p=2.0,
        grid_lo=(0.0,), grid_hi=(1.5,), omega_span=1.0, omega_cells=128,
        constant=ConstantRequest("basic-ex1", {"n": 1, "diam": 1.0, "delta": delta}),
        scale=1.0 / delta,
        jensen=jensen,
        notes="forward-interval mean with the 1/delta scale; drift weight "
              "block checks the worst preimage ratio 0.875",
    )


def _basic_ex1_2d() -> ExampleConfig:
    omega = geo.Box((0.0, 0.0), (1.0, 1.0))
    lo, hi = (0.0, -0.5), (1.5, 1.5)
    domain = geo.DomainConfig(omega, _frame(lo, hi, omega), bounds=(lo, hi))
    delta = 0.5
    return ExampleConfig(
        name="basic-ex1-2d",
        domain=domain,
        kernel=ker.HalfBallCone(delta, (1.0, 0.0)),
        p=2.0,
        grid_lo=lo, grid_hi=hi, omega_span=1.0, omega_cells=32,
        constant=ConstantRequest("basic-ex1",
                                 {"n": 2, "diam": math.sqrt(2.0), "delta": delta}),
        scale=1.0 / delta,
        notes="planar forward half ball; collar frame catches every exit",
    )


def _basic_ex2_1d() -> ExampleConfig:
    omega = geo.Box((0.0,), (1.0,))
    gamma = geo.Union((geo.Box((-0.5,), (0.0,)), geo.Box((1.0,), (1.5,))))
    domain = geo.DomainConfig(omega, gamma, bounds=((-0.5,), (1.5,)))
    return ExampleConfig(
        name="basic-ex2-1d",
        domain=domain,
        kernel=ker.InversePower(eps=0.25, delta=0.5, p=2.0, n=1),
        p=2.0,
        grid_lo=(-0.5,), grid_hi=(1.5,), omega_span=1.0, omega_cells=256,
        constant=ConstantRequest("basic-ex2", {"diam": 1.0, "p": 2.0}),
        tol=1e-10,
        subsample=1,
        notes="exact regime: grid-aligned shifts, constant diam^p = 1",
    )


def _basic_ex2_2d() -> ExampleConfig:
    omega = geo.Box((0.0, 0.0), (1.0, 1.0))
    lo, hi = (-0.5, -0.5), (1.5, 1.5)
    domain = geo.DomainConfig(omega, _frame(lo, hi, omega), bounds=(lo, hi))
    return ExampleConfig(
        name="basic-ex2-2d",
        domain=domain,
        kernel=ker.InversePower(eps=0.25, delta=0.5, p=2.0, n=2),
        p=2.0,
        grid_lo=lo, grid_hi=hi, omega_span=1.0, omega_cells=64,
        constant=ConstantRequest("basic-ex2", {"diam": math.sqrt(2.0), "p": 2.0}),
        tol=1e-10,
        subsample=1,
        notes="exact regime on the unit square, constant diam^p = 2",
    )


def _basic_ex1_ext_1d() -> ExampleConfig:
    omega = geo.Box((0.0,), (1.0,))
    domain = geo.DomainConfig(omega, geo.Box((1.0,), (2.0,)),
                              bounds=((0.0,), (2.0,)))
    delta, tau = 1.0, 0.95
    kernel = ker.VariableHalfBall(delta=delta, axis=(1.0,), c0=0.95, c1=0.05)
    # the radius profile must keep tau*|B_delta|/2 <= |support| <= |B_delta|/2
    r_lo = float(kernel.radius_at((0.0,))[0])
    r_hi = float(kernel.radius_at((1.0,))[0])
    if r_lo < tau ** (1.0 / kernel.n) * delta or r_hi > delta:
        raise GateError("tau**(1/n)*delta <= r(x) <= delta",
                        f"r in [{r_lo}, {r_hi}]")
    return ExampleConfig(
        name="basic-ex1-ext-1d",
        domain=domain,
        kernel=kernel,
        p=2.0,
        grid_lo=(0.0,), grid_hi=(2.0,), omega_span=1.0, omega_cells=128,
        constant=ConstantRequest("basic-ex1-ext",
                                 {"n": 1, "p": 2.0, "diam": 1.0,
                                  "delta": delta, "tau": tau}),
        notes="shrinking forward support at volume fraction tau = 0.95; "
              "plain mean, no 1/delta scale",
    )


def _sign_change1_2d() -> ExampleConfig:
    omega = geo.Ball((0.0, 0.0), 1.0)
    gamma = geo.AnnulusAround(geo.Point((0.0, 0.0)), 1.0, 2.0)
    domain = geo.DomainConfig(omega, gamma, bounds=((-2.0, -2.0), (2.0, 2.0)))
    delta, tau = 1.0, 0.99
    nu_delta = (1.0 / tau) * (1.0 - 0.5 * (delta / 2.0) ** 2)
    jensen = {
        "corr": wts.FullBall(delta, 2).to_dict(),
        "weight": wts.QuadraticCap((0.0, 0.0), 2.0).to_dict(),
        "r": {"kind": "const",
              "value": 1.0 / (tau * cst.ball_volume(2, delta))},
        "nu": nu_delta,
        "y_samples": 64,
        "quad_resolution": 128,
    }
    return ExampleConfig(
        name="sign-change1-2d",
        domain=domain,
        kernel=ker.SignChanging(delta=delta, alpha=0.0,
                                sigma=ker.AngularCheckerboard(200, (0,), n=2),
                                tau=tau, n=2, p=2.0),
        p=2.0,
        grid_lo=(-2.0, -2.0), grid_hi=(2.0, 2.0), omega_span=2.0, omega_cells=32,
        constant=ConstantRequest("sign-change1",
                                 {"n": 2, "p": 2.0, "alpha": 0.0, "tau": tau,
                                  "delta": delta, "diam": 2.0}),
        jensen=jensen,
        notes="one thin flipped sector out of 200 keeps the angular mean at "
              "0.99; the cap-weight block checks the shifted-ball ratio",
    )


def _sign_change2_2d() -> ExampleConfig:
    omega = geo.Ball((0.0, 0.0), 1.0)
    gamma = geo.AnnulusAround(geo.Point((0.0, 0.0)), 1.0, 4.0)
    domain = geo.DomainConfig(omega, gamma, bounds=((-4.0, -4.0), (4.0, 4.0)))
    return ExampleConfig(
        name="sign-change2-2d",
        domain=domain,
        kernel=ker.SignChanging(delta=3.0, alpha=0.5,
                                sigma=ker.AngularCheckerboard(4, (0,), n=2),
                                tau=0.5, n=2, p=2.0),
        p=2.0,
        grid_lo=(-4.0, -4.0), grid_hi=(4.0, 4.0), omega_span=2.0, omega_cells=12,
        constant=ConstantRequest("sign-change2",
                                 {"n": 2, "p": 2.0, "alpha": 0.5, "tau": 0.5,
                                  "delta": 3.0, "vol_omega": math.pi}),
        notes="horizon spanning the whole domain; nu = 1/4 gives the control "
              "constant 4 with no geometric factor",
    )


def _g_flow_1d() -> ExampleConfig:
    omega = geo.Box((0.0,), (1.0,))
    domain = geo.DomainConfig(omega, geo.Box((1.0,), (1.5,)),
                              bounds=((0.0,), (1.5,)))
    kernel = ker.FlowScaled(1.0, 0.25, (1.0,), 0.2, 0.4, p=2.0)
    flow = dyn.MatrixField(1.0, 0.25, (1.0,), c_lo=1.0, c_hi=1.25)
    # S bounds sup alpha(zeta)*|zeta| over the shell: alpha <= ceil(1/zeta)
    # so alpha*zeta <= 1 + zeta <= 1.4
    return ExampleConfig(
        name="g-flow-1d",
        domain=domain,
        kernel=kernel,
        p=2.0,
        grid_lo=(0.0,), grid_hi=(1.5,), omega_span=1.0, omega_cells=128,
        constant=ConstantRequest("g-flow", {"p": 2.0, "C": 1.0, "S": 1.4,
                                            "theta": 1.0, "tau": 0.25}),
        flow=flow,
        phi_region=kernel.phi_region(),
        absorbing=geo.Box((1.0,), (1.5,)),
        notes="drifted shell steps; tau = n*K with K = 0.25, theta = 1",
    )


def _discontinuous_2d() -> ExampleConfig:
    omega = geo.Box((0.0, 0.0), (2.0, 2.0))
    delta1, delta2, theta = 0.6, 0.25, math.pi / 4.0
    # full-width slabs: upward orbits exit with x1 anywhere in (0, 2),
    # including starts near the top corners that leave on their first step
    gamma = geo.Union((geo.Box((0.0, -1.0), (2.0, 0.0)),
                       geo.Box((0.0, 2.0), (2.0, 3.0))))
    domain = geo.DomainConfig(omega, gamma, bounds=((0.0, -1.0), (2.0, 3.0)))
    t = math.tan(theta)
    cone = geo.Cone((0.0, 0.0), (1.0, 0.0), theta,
                    bounds=((0.0, -delta1 * t), (delta1, delta1 * t)))
    phi = geo.Intersection((cone,
                            geo.HalfSpace((delta1, 0.0), (-1.0, 0.0)),
                            geo.HalfSpace((0.0, delta2), (0.0, 1.0))))
    return ExampleConfig(
        name="discontinuous-2d",
        domain=domain,
        kernel=ker.Laminate(delta1, delta2, theta, p=2.0, interface=1.0),
        p=2.0,
        grid_lo=(0.0, -1.0), grid_hi=(2.0, 3.0), omega_span=2.0, omega_cells=48,
        constant=ConstantRequest("discontinuous",
                                 {"p": 2.0, "C": 1.0, "theta": theta,
                                  "delta1": delta1, "delta2": delta2}),
        flow=dyn.LaminateFlow(delta1, delta2, theta, interface=1.0),
        phi_region=phi,
        absorbing=gamma,
        notes="mirrored sector kernel across the x = 1 interface; orbits "
              "ratchet upward by at least delta2 per step",
    )


def _lowdim_point_2d() -> ExampleConfig:
    target = geo.Point((0.0, 0.0))
    omega = geo.Box((-1.0, -1.0), (1.0, 1.0))
    domain = geo.DomainConfig(omega, target, bounds=((-1.0, -1.0), (1.0, 1.0)))
    beta = 2.5
    jensen = {
        "corr": wts.ConeTube(0.5, math.pi / 4.0, target).to_dict(),
        "weight": wts.DistancePower(target, 3.0, 1.5).to_dict(),
        "r": {"kind": "cone-sector", "c_sector": math.pi / 4.0},
        "nu": 2.0,
        "y_samples": 64,
        "quad_resolution": 64,
    }
    return ExampleConfig(
        name="lowdim-point-2d",
        domain=domain,
        kernel=ker.DistanceScaled(target, beta=beta, delta0=0.5, p=2.0, n=2),
        p=2.0,
        grid_lo=(-1.0, -1.0), grid_hi=(1.0, 1.0), omega_span=2.0, omega_cells=32,
        constant=None,
        family="distance",
        family_args={"beta": beta, "s": 0.5, "m": 0},
        subsample=1,
        jensen=jensen,
        notes="point constraint: no pinned constant, ratio-mode verify plus "
              "refinement sweeps",
    )


def _lowdim_circle_2d() -> ExampleConfig:
    target = geo.Circle((0.0, 0.0), 0.5)
    omega = geo.Box((-1.0, -1.0), (1.0, 1.0))
    domain = geo.DomainConfig(omega, target, bounds=((-1.0, -1.0), (1.0, 1.0)))
    beta = 1.8
    return ExampleConfig(
        name="lowdim-circle-2d",
        domain=domain,
        kernel=ker.DistanceScaled(target, beta=beta, delta0=0.5, p=2.0, n=2),
        p=2.0,
        grid_lo=(-1.0, -1.0), grid_hi=(1.0, 1.0), omega_span=2.0, omega_cells=32,
        constant=None,
        family="distance",
        family_args={"beta": beta, "s": 0.5, "m": 1},
        subsample=1,
        notes="curve constraint: beta stays below 2 so the s = 0.5 profile "
              "clears the admissibility threshold",
    )


_BUILDERS = (
    _basic_ex1_1d,
    _basic_ex1_2d,
    _basic_ex2_1d,
    _basic_ex2_2d,
    _basic_ex1_ext_1d,
    _sign_change1_2d,
    _sign_change2_2d,
    _g_flow_1d,
    _discontinuous_2d,
    _lowdim_point_2d,
    _lowdim_circle_2d,
)


def _build_registry() -> dict:
    out = {}
    for build in _BUILDERS:
        cfg = build()
        if cfg.name in out:
            raise ConfigError(f"duplicate registry key {cfg.name!r}")
        cfg.validate()
        out[cfg.name] = cfg
    return out


REGISTRY = _build_registry()


def names() -> list:
    return sorted(REGISTRY)


def get(name: str) -> ExampleConfig:
    if name not in REGISTRY:
        known = ", ".join(names())
        raise ConfigError(f"unknown example {name!r}; known: {known}")
    return REGISTRY[name]
