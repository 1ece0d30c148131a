"""Closed-form and optimized constants for the verification harness.

Every bound verified elsewhere in the package is assembled here from its
explicit factors, so reports can show which factor dominates.
"""

import math

from .errors import GateError

__all__ = [
    "ball_volume",
    "control_constant",
    "eta",
    "r_zero",
    "cone_volume_fraction",
    "example_bounds",
]


def ball_volume(n: int, radius: float = 1.0) -> float:
    """Volume of the n-dimensional ball of the given radius.

    Uses the two-step recursion v(n) = v(n-2) * 2*pi/n so the small-n
    values come out exact (v(1)=2, v(2)=pi, v(3)=4*pi/3).
    """
    if n < 0:
        raise GateError("n >= 0", f"n={n}")
    v = 1.0 if n % 2 == 0 else 2.0
    for k in range(2 if n % 2 == 0 else 3, n + 1, 2):
        v *= 2.0 * math.pi / k
    return v * radius**n


def _golden_min(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Golden-section minimum of a unimodal f on [a, b]. Returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def control_constant(nu: float, p: float) -> float:
    """Optimal absorption constant C(nu, p).

    Parameters
    ----------
    nu : float
        Contraction factor of the weight condition, in (0, 1).
    p : float
        Lebesgue exponent, >= 1.

    Returns
    -------
    float
        1/(1-nu) for p=1, (1/(1-sqrt(nu)))**2 for p=2, and otherwise the
        golden-section minimum of
        lam -> (lam**(p-1) - nu)**-1 * (lam/(1-lam))**(p-1)
        over (nu**(1/(p-1)), 1).
    """
    if not 0.0 < nu < 1.0:
        raise GateError("nu in (0, 1)", f"nu={nu}")
    if p < 1.0:
        raise GateError("p >= 1", f"p={p}")
    if p == 1.0:
        return 1.0 / (1.0 - nu)
    if p == 2.0:
        return (1.0 / (1.0 - math.sqrt(nu))) ** 2

    lo = nu ** (1.0 / (p - 1.0))

    def objective(lam: float) -> float:
        return (lam / (1.0 - lam)) ** (p - 1.0) / (lam ** (p - 1.0) - nu)

    # inset the bracket: both endpoints are poles of the objective
    eps = 1e-9
    _, val = _golden_min(objective, lo + eps * (1.0 - lo), 1.0 - eps)
    return val


def eta(n: int) -> float:
    """Centroid offset factor of the unit half-ball.

    eta(n) = (2/(n+1)) * vol(B^{n-1}) / vol(B^n); eta(1) = 1/2,
    eta(2) = 4/(3 pi), eta(3) = 3/8.
    """
    if n < 1:
        raise GateError("n >= 1", f"n={n}")
    return (2.0 / (n + 1.0)) * ball_volume(n - 1) / ball_volume(n)


def r_zero(n: int, p: float, alpha: float) -> float:
    """Normalized dual-norm constant R0 for the sign-changing family.

    R0 = ((n-alpha)/n) * ((n-alpha)/(n-q*alpha))**(p-1) with q = p/(p-1).
    Requires alpha < n/q; alpha = 0 gives exactly 1 for every p.
    """
    if p < 1.0:
        raise GateError("p >= 1", f"p={p}")
    if alpha == 0.0:
        return 1.0
    if p == 1.0:
        # q = infinity: no admissible alpha > 0
        if alpha > 0.0:
            raise GateError("alpha < n/q", f"p=1 forces alpha <= 0, got {alpha}")
        return (n - alpha) / n
    q = p / (p - 1.0)
    if alpha >= n / q:
        raise GateError("alpha < n/q", f"alpha={alpha}, n/q={n / q}")
    return ((n - alpha) / n) * ((n - alpha) / (n - q * alpha)) ** (p - 1.0)


def cone_volume_fraction(n: int, theta: float) -> float:
    """Lower bound c'(n, theta) for the volume of a unit cone section.

    c' = tan(theta)**(n-1) * cos(theta)**n * vol(B^{n-1}) / (n+1).
    """
    if not 0.0 < theta < math.pi / 2.0:
        raise GateError("theta in (0, pi/2)", f"theta={theta}")
    return math.tan(theta) ** (n - 1) * math.cos(theta) ** n * ball_volume(n - 1) / (n + 1.0)


def _nu_sign_change1(n: int, p: float, alpha: float, tau: float, delta: float, diam: float) -> float:
    return (r_zero(n, p, alpha) / tau) * (1.0 - (n / (n + 2.0)) * (delta / diam) ** 2)


def example_bounds(name: str, **params) -> dict:
    """Evaluate a named explicit bound with its factor breakdown.

    Parameters
    ----------
    name : str
        One of basic-ex1, basic-ex2, basic-ex1-ext, sign-change1,
        sign-change2, g-flow, discontinuous, poinc-cor1, poinc-cor2,
        intro-poinc3.
    **params
        Formula parameters; see each branch.

    Returns
    -------
    dict
        {"constant": float, "breakdown": {...}} where the breakdown maps
        factor names to values, including any gate quantities.
    """
    if name == "basic-ex1":
        n = int(params.get("n", 1))
        diam = float(params["diam"])
        delta = float(params.get("delta", 0.5))
        if not 0.0 < delta <= 1.0:
            raise GateError("0 < delta <= 1", f"delta={delta}")
        e = eta(n)
        c = 4.0 * (1.0 + diam) ** 3 / e**2
        return {
            "constant": c,
            "breakdown": {"eta": e, "diam": diam, "delta": delta,
                          "improved_constant": 4.0 * (1.0 + diam) ** 2 / e**2},
        }

    if name == "basic-ex2":
        diam = float(params["diam"])
        p = float(params.get("p", 2.0))
        return {"constant": diam**p, "breakdown": {"diam": diam, "p": p}}

    if name == "basic-ex1-ext":
        n = int(params.get("n", 1))
        p = float(params.get("p", 2.0))
        diam = float(params["diam"])
        delta = float(params.get("delta", 0.5))
        tau = float(params.get("tau", 1.0))
        if not 0.0 < delta <= 1.0:
            raise GateError("0 < delta <= 1", f"delta={delta}")
        e = eta(n)
        floor = 1.0 - e * delta / (1.0 + diam)
        if not floor < tau <= 1.0:
            raise GateError("1 - eta*delta/(1+diam) < tau <= 1", f"tau={tau}, floor={floor}")
        nu_tau = floor / tau
        c = control_constant(nu_tau, p) * (1.0 + diam)
        return {
            "constant": c,
            "breakdown": {"eta": e, "nu_tau": nu_tau, "tau": tau,
                          "control": control_constant(nu_tau, p), "diam": diam},
        }

    if name == "sign-change1":
        n = int(params.get("n", 2))
        p = float(params.get("p", 2.0))
        alpha = float(params.get("alpha", 0.0))
        tau = float(params.get("tau", 1.0))
        delta = float(params["delta"])
        diam = float(params["diam"])
        if diam < 2.0 / math.sqrt(3.0):
            raise GateError("diam >= 2/sqrt(3)", f"diam={diam}")
        if delta > diam / 2.0:
            raise GateError("delta <= diam/2", f"delta={delta}, diam={diam}")
        nu_delta = _nu_sign_change1(n, p, alpha, tau, delta, diam)
        if not nu_delta < 1.0:
            raise GateError("nu_delta < 1", f"nu_delta={nu_delta}")
        c = control_constant(nu_delta, p) * diam**2
        return {
            "constant": c,
            "breakdown": {"r_zero": r_zero(n, p, alpha), "nu_delta": nu_delta,
                          "control": control_constant(nu_delta, p), "diam_sq": diam**2},
        }

    if name == "sign-change2":
        n = int(params.get("n", 2))
        p = float(params.get("p", 2.0))
        alpha = float(params.get("alpha", 0.0))
        tau = float(params.get("tau", 1.0))
        delta = float(params["delta"])
        vol_omega = float(params["vol_omega"])
        nu_delta = r_zero(n, p, alpha) * vol_omega / (tau * ball_volume(n, delta))
        if not nu_delta < 1.0:
            raise GateError("nu_delta < 1", f"nu_delta={nu_delta}")
        c = control_constant(nu_delta, p)
        return {
            "constant": c,
            "breakdown": {"r_zero": r_zero(n, p, alpha), "nu_delta": nu_delta,
                          "vol_omega": vol_omega, "ball_delta": ball_volume(n, delta)},
        }

    if name == "g-flow":
        p = float(params.get("p", 2.0))
        big_c = float(params.get("C", 1.0))
        big_s = float(params["S"])
        theta = float(params.get("theta", 1.0))
        tau = float(params["tau"])
        c = big_c * big_s**p * math.exp(theta * big_s * tau)
        return {
            "constant": c,
            "breakdown": {"C": big_c, "S_pow_p": big_s**p,
                          "exp_theta_S_tau": math.exp(theta * big_s * tau)},
        }

    if name == "discontinuous":
        p = float(params.get("p", 2.0))
        big_c = float(params.get("C", 1.0))
        theta = float(params["theta"])
        delta1 = float(params["delta1"])
        delta2 = float(params["delta2"])
        if not 0.0 < theta <= math.pi / 4.0:
            raise GateError("0 < theta <= pi/4", f"theta={theta}")
        if not 0.0 < delta2 < delta1 * math.sin(theta):
            raise GateError("0 < delta2 < delta1*sin(theta)", f"delta2={delta2}")
        z1_geom = (delta1 * math.tan(theta) - delta2) ** 2 / math.tan(theta)
        z1_stated = (delta1 * math.sin(theta) - delta2) ** 2 / math.sin(theta)
        c = 2.0 ** (p + 4.0) * big_c
        return {
            "constant": c,
            "breakdown": {"C": big_c, "two_pow": 2.0 ** (p + 4.0),
                          "z1_volume": z1_geom, "z1_volume_stated": z1_stated,
                          "phi_volume": 0.5 * z1_geom},
        }

    if name == "poinc-cor1":
        m0 = float(params["M0"])
        theta = float(params["theta"])
        lam = float(params["lam"])
        c = m0 * math.exp(theta * lam)
        return {"constant": c, "breakdown": {"M0": m0, "exp_theta_lam": math.exp(theta * lam)}}

    if name == "poinc-cor2":
        p = float(params.get("p", 2.0))
        alpha0 = float(params["alpha0"])
        m0 = float(params["M0"])
        n0 = float(params["N0"])
        theta0 = float(params["Theta0"])
        c = alpha0**p * m0 * n0 * theta0**alpha0
        return {
            "constant": c,
            "breakdown": {"alpha0_pow_p": alpha0**p, "M0": m0, "N0": n0,
                          "Theta0_pow": theta0**alpha0},
        }

    if name == "intro-poinc3":
        n = int(params.get("n", 2))
        delta = float(params["delta"])
        diam_ext = float(params["diam_ext"])
        breakdown = {"delta_pow_n": delta**n, "diam_ext_sq": diam_ext**2,
                     "unit_ball": ball_volume(n)}
        c = delta**n * diam_ext**2 * ball_volume(n)
        out = {"constant": c, "breakdown": breakdown}
        if "beta" in params:
            beta = float(params["beta"])
            tau = float(params["tau"])
            if not 0.0 < tau < 1.0:
                raise GateError("0 < tau < 1", f"tau={tau}")
            if beta == n - 1 or beta == n + 1:
                raise GateError("beta not in {n-1, n+1}", f"beta={beta}")
            spec = ((n - beta + 1.0) * diam_ext / (n * (1.0 - tau ** (n - beta + 1.0)))) ** 2
            breakdown["specialized_constant"] = spec
            out["specialized_constant"] = spec
        return out

    raise GateError("known bound name", f"name={name!r}")
