"""Blow-up charts for the collapsing-cusp heat and double spaces.

Charts are explicit coordinate maps between projective chart coordinates and
the ambient coordinates (x, y, z, x', y', z'[, t]).  Vector fields are plain
evaluators (point -> components); their lifts are computed numerically by
pushing forward through the inverse chart map with a Richardson-extrapolated
central-difference Jacobian, which is enough to verify every closed-form lift
to 1e-8 away from the faces.

Validity regions are implemented as explicit predicates with margins; the
margins are engineering choices, not canonical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GeometryParams:
    """Collapse rate k >= 2, fibre dimension f >= 1, base dimension b >= 0."""

    k: int
    f: int = 1
    b: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("collapse rate k must be >= 2")
        if self.f < 1:
            raise ValueError("fibre dimension f must be >= 1")
        if self.b < 0:
            raise ValueError("base dimension b must be >= 0")

    @property
    def n(self) -> int:
        return 1 + self.b + self.f


# ---------------------------------------------------------------------------
# quasihomogeneous blow-up model map
# ---------------------------------------------------------------------------

def weighted_radius(a: int, x: np.ndarray, y: np.ndarray) -> float:
    """r_a(x, y) = (sum x_i^{2a} + sum y_j^2)^{1/2a}; homogeneous for x ~ R, y ~ R^a."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float)) if np.size(y) else np.zeros(0)
    return float((np.sum(x ** (2 * a)) + np.sum(y ** 2)) ** (1.0 / (2 * a)))


def qh_blowup_map(a: int, omega, nu, R: float, rest=()):
    """Blow-down (omega, nu, R, rest) -> (R omega, R^a nu, rest).

    Requires (omega, nu) on the weighted unit sphere and omega >= 0.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float)) if np.size(nu) else np.zeros(0)
    if np.any(omega < 0):
        raise ValueError("omega components must be nonnegative")
    r = weighted_radius(a, omega, nu)
    if abs(r - 1.0) > 1e-12:
        raise ValueError(f"(omega, nu) off the weighted sphere: r_a = {r}")
    return np.concatenate([R * omega, (R ** a) * nu, np.asarray(rest, dtype=float)])


# ---------------------------------------------------------------------------
# coordinate layouts and charts
# ---------------------------------------------------------------------------

class CoordLayout:
    """Ordered coordinate names with pack/unpack between dicts and vectors."""

    def __init__(self, scalars, vectors):
        # vectors: list of (name, length)
        names = []
        for s in scalars:
            names.append(s)
        for name, length in vectors:
            names.extend(f"{name}{i}" for i in range(length))
        self.names = tuple(names)
        self.index = {n: i for i, n in enumerate(self.names)}

    def pack(self, d: dict) -> np.ndarray:
        return np.array([d[n] for n in self.names], dtype=float)

    def unpack(self, v) -> dict:
        return {n: float(v[i]) for i, n in enumerate(self.names)}

    @property
    def dim(self):
        return len(self.names)


class Chart:
    """A chart map into ambient coordinates with an explicit validity region."""

    name = "chart"

    def __init__(self, geom: GeometryParams):
        self.geom = geom

    def to_base(self, c: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def from_base(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def valid(self, c: np.ndarray) -> bool:
        raise NotImplementedError

    def jacobian(self, c: np.ndarray, scale: float = 1e-4) -> np.ndarray:
        """d(to_base)/d(chart) by central differences, Richardson once."""
        c = np.asarray(c, dtype=float)
        m = self.chart_layout.dim

        def fd(h):
            J = np.zeros((self.base_layout.dim, m))
            for j in range(m):
                dp = np.zeros(m)
                dp[j] = h * max(1.0, abs(c[j]))
                J[:, j] = (self.to_base(c + dp) - self.to_base(c - dp)) / (2 * dp[j])
            return J

        J1, J2 = fd(scale), fd(scale / 2)
        return (4.0 * J2 - J1) / 3.0

    def probe_points(self, c: np.ndarray, scale: float = 1e-4):
        """The finite-difference evaluation points used by ``jacobian``."""
        c = np.asarray(c, dtype=float)
        pts = []
        for j in range(self.chart_layout.dim):
            dp = np.zeros(self.chart_layout.dim)
            dp[j] = scale * max(1.0, abs(c[j]))
            pts.extend([c + dp, c - dp])
        return pts


def _double_base_layout(g: GeometryParams) -> CoordLayout:
    return CoordLayout(["x", "xp"], [("y", g.b), ("yp", g.b), ("z", g.f), ("zp", g.f)])


def _heat_base_layout(g: GeometryParams) -> CoordLayout:
    return CoordLayout(["x", "xp", "t"], [("y", g.b), ("yp", g.b), ("z", g.f), ("zp", g.f)])


class BkfChart(Chart):
    """First heat blow-up, projective in x': (x', T, eta, s, y', z, z').

    T = sqrt(t)/x', eta = (y-y')/x', s = x/x'.  Valid away from the lift of
    the x = 0 face, enforced by s within [0.1, 10].
    """

    name = "bkf"

    def __init__(self, geom):
        super().__init__(geom)
        self.base_layout = _heat_base_layout(geom)
        self.chart_layout = CoordLayout(["xp", "T", "s"],
                                        [("eta", geom.b), ("yp", geom.b),
                                         ("z", geom.f), ("zp", geom.f)])

    def to_base(self, c):
        d = self.chart_layout.unpack(c)
        g = self.geom
        out = {"x": d["s"] * d["xp"], "xp": d["xp"], "t": (d["T"] * d["xp"]) ** 2}
        for i in range(g.b):
            out[f"y{i}"] = d[f"yp{i}"] + d["xp"] * d[f"eta{i}"]
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.base_layout.pack(out)

    def from_base(self, p):
        d = self.base_layout.unpack(p)
        g = self.geom
        xp = d["xp"]
        out = {"xp": xp, "T": np.sqrt(max(d["t"], 0.0)) / xp, "s": d["x"] / xp}
        for i in range(g.b):
            out[f"eta{i}"] = (d[f"y{i}"] - d[f"yp{i}"]) / xp
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.chart_layout.pack(out)

    def valid(self, c):
        d = self.chart_layout.unpack(c)
        return d["xp"] > 0 and 0.1 <= d["s"] <= 10.0 and d["T"] >= 0


class FfChart(Chart):
    """Second heat blow-up, projective in x': (x', Tt, st, etat, y', z, z').

    Tt = sqrt(t)/x'^k, st = (x-x')/x'^k, etat = (y-y')/x'^k.  Valid near the
    front face away from the lift of the big face; |st| x'^{k-1} < 0.9 keeps
    x positive.
    """

    name = "ff"

    def __init__(self, geom):
        super().__init__(geom)
        self.base_layout = _heat_base_layout(geom)
        self.chart_layout = CoordLayout(["xp", "Tt", "st"],
                                        [("etat", geom.b), ("yp", geom.b),
                                         ("z", geom.f), ("zp", geom.f)])

    def to_base(self, c):
        d = self.chart_layout.unpack(c)
        g = self.geom
        xp = d["xp"]
        xpk = xp ** g.k
        out = {"x": xp + xpk * d["st"], "xp": xp, "t": (d["Tt"] * xpk) ** 2}
        for i in range(g.b):
            out[f"y{i}"] = d[f"yp{i}"] + xpk * d[f"etat{i}"]
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.base_layout.pack(out)

    def from_base(self, p):
        d = self.base_layout.unpack(p)
        g = self.geom
        xp = d["xp"]
        xpk = xp ** g.k
        out = {"xp": xp, "Tt": np.sqrt(max(d["t"], 0.0)) / xpk,
               "st": (d["x"] - xp) / xpk}
        for i in range(g.b):
            out[f"etat{i}"] = (d[f"y{i}"] - d[f"yp{i}"]) / xpk
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.chart_layout.pack(out)

    def valid(self, c):
        d = self.chart_layout.unpack(c)
        return (d["xp"] > 0 and d["Tt"] >= 0
                and abs(d["st"]) * d["xp"] ** (self.geom.k - 1) < 0.9)


class TfFfChart(Chart):
    """Corner chart near tf and ff: (Tt, Et, St, Zt, x', y', z').

    St = (x-x')/sqrt(t), Et = (y-y')/sqrt(t), Zt = x'^k (z-z')/sqrt(t).
    """

    name = "tfff"

    def __init__(self, geom):
        super().__init__(geom)
        self.base_layout = _heat_base_layout(geom)
        self.chart_layout = CoordLayout(["Tt", "St", "xp"],
                                        [("Et", geom.b), ("Zt", geom.f),
                                         ("yp", geom.b), ("zp", geom.f)])

    def to_base(self, c):
        d = self.chart_layout.unpack(c)
        g = self.geom
        xp = d["xp"]
        tau = d["Tt"] * xp ** g.k
        out = {"x": xp + tau * d["St"], "xp": xp, "t": tau ** 2}
        for i in range(g.b):
            out[f"y{i}"] = d[f"yp{i}"] + tau * d[f"Et{i}"]
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"zp{i}"] + d["Tt"] * d[f"Zt{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.base_layout.pack(out)

    def from_base(self, p):
        d = self.base_layout.unpack(p)
        g = self.geom
        xp = d["xp"]
        tau = np.sqrt(max(d["t"], 0.0))
        Tt = tau / xp ** g.k
        out = {"Tt": Tt, "St": (d["x"] - xp) / tau, "xp": xp}
        for i in range(g.b):
            out[f"Et{i}"] = (d[f"y{i}"] - d[f"yp{i}"]) / tau
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"Zt{i}"] = (d[f"z{i}"] - d[f"zp{i}"]) / Tt
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.chart_layout.pack(out)

    def valid(self, c):
        d = self.chart_layout.unpack(c)
        tau = d["Tt"] * d["xp"] ** self.geom.k
        return d["xp"] > 0 and d["Tt"] > 0 and tau * abs(d["St"]) < 0.9 * d["xp"]


class DoubleChart(Chart):
    """Front-face chart of the double space, projective in x'.

    st = (x-x')/x'^k, etat = (y-y')/x'^k; no time variable.
    """

    name = "double"

    def __init__(self, geom):
        super().__init__(geom)
        self.base_layout = _double_base_layout(geom)
        self.chart_layout = CoordLayout(["xp", "st"],
                                        [("etat", geom.b), ("yp", geom.b),
                                         ("z", geom.f), ("zp", geom.f)])

    def to_base(self, c):
        d = self.chart_layout.unpack(c)
        g = self.geom
        xp = d["xp"]
        xpk = xp ** g.k
        out = {"x": xp + xpk * d["st"], "xp": xp}
        for i in range(g.b):
            out[f"y{i}"] = d[f"yp{i}"] + xpk * d[f"etat{i}"]
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.base_layout.pack(out)

    def from_base(self, p):
        d = self.base_layout.unpack(p)
        g = self.geom
        xp = d["xp"]
        xpk = xp ** g.k
        out = {"xp": xp, "st": (d["x"] - xp) / xpk}
        for i in range(g.b):
            out[f"etat{i}"] = (d[f"y{i}"] - d[f"yp{i}"]) / xpk
            out[f"yp{i}"] = d[f"yp{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.chart_layout.pack(out)

    def valid(self, c):
        d = self.chart_layout.unpack(c)
        return d["xp"] > 0 and abs(d["st"]) * d["xp"] ** (self.geom.k - 1) < 0.9


class DoubleChartX(Chart):
    """Front-face chart of the double space with x as the defining function.

    st = (x-x')/x^k, etat = (y-y')/x^k; here x' = x - x^k st.
    """

    name = "double_x"

    def __init__(self, geom):
        super().__init__(geom)
        self.base_layout = _double_base_layout(geom)
        self.chart_layout = CoordLayout(["x", "st"],
                                        [("etat", geom.b), ("y", geom.b),
                                         ("z", geom.f), ("zp", geom.f)])

    def to_base(self, c):
        d = self.chart_layout.unpack(c)
        g = self.geom
        x = d["x"]
        xk = x ** g.k
        out = {"x": x, "xp": x - xk * d["st"]}
        for i in range(g.b):
            out[f"y{i}"] = d[f"y{i}"]
            out[f"yp{i}"] = d[f"y{i}"] - xk * d[f"etat{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.base_layout.pack(out)

    def from_base(self, p):
        d = self.base_layout.unpack(p)
        g = self.geom
        x = d["x"]
        xk = x ** g.k
        out = {"x": x, "st": (x - d["xp"]) / xk}
        for i in range(g.b):
            out[f"etat{i}"] = (d[f"y{i}"] - d[f"yp{i}"]) / xk
            out[f"y{i}"] = d[f"y{i}"]
        for i in range(g.f):
            out[f"z{i}"] = d[f"z{i}"]
            out[f"zp{i}"] = d[f"zp{i}"]
        return self.chart_layout.pack(out)

    def valid(self, c):
        d = self.chart_layout.unpack(c)
        return d["x"] > 0 and abs(d["st"]) * d["x"] ** (self.geom.k - 1) < 0.9


# ---------------------------------------------------------------------------
# numeric lifts
# ---------------------------------------------------------------------------

def lift_field_numeric(field, chart: Chart, chart_point, scale: float = 1e-4):
    """Components of a base vector field in chart coordinates at one point.

    ``field`` maps a base coordinate vector to components in the base layout.
    Solves J w = field(base) with the finite-difference chart Jacobian;
    refuses when a difference step would leave the chart validity region.
    """
    c = np.asarray(chart_point, dtype=float)
    if not chart.valid(c):
        raise ValueError(f"point outside the validity region of chart {chart.name}")
    for probe in chart.probe_points(c, scale):
        if not chart.valid(probe):
            raise ValueError(
                f"finite-difference step of size {scale:g} leaves chart "
                f"{chart.name}; the point is too close to a face")
    J = chart.jacobian(c, scale)
    v = np.asarray(field(chart.to_base(c)), dtype=float)
    w, *_ = np.linalg.lstsq(J, v, rcond=None)
    resid = np.max(np.abs(J @ w - v))
    if resid > 1e-6 * max(1.0, np.max(np.abs(v))):
        raise ValueError(f"field does not lie in the chart tangent image "
                         f"(residual {resid:.2e})")
    return w


def coordinate_field(layout: CoordLayout, weights):
    """Field with components weight(point) on the named coordinates."""

    def field(p):
        d = layout.unpack(p)
        out = np.zeros(layout.dim)
        for name, wfun in weights.items():
            out[layout.index[name]] = wfun(d) if callable(wfun) else wfun
        return out

    return field


# closed-form lifts used by the verification table -------------------------

def lift_cases_double(geom: GeometryParams):
    """Known lifts on the double-space charts: (label, chart factory, field, expected)."""
    k = geom.k

    def xk_dx(layout):
        return coordinate_field(layout, {"x": lambda d: d["x"] ** k})

    def xk_dy(layout, j=0):
        return coordinate_field(layout, {f"y{j}": lambda d: d["x"] ** k})

    def dz(layout, i=0):
        return coordinate_field(layout, {f"z{i}": 1.0})

    cases = []

    def exp_double(cd, cl):
        fac = (cd["xp"] ** (k - 1) * cd["st"] + 1.0) ** k
        out = {name: 0.0 for name in cl.names}
        out["st"] = fac
        return out

    cases.append(("xk_dx on projective-x' chart", DoubleChart,
                  xk_dx, "st", exp_double))

    if geom.b > 0:
        def exp_double_y(cd, cl):
            fac = (cd["xp"] ** (k - 1) * cd["st"] + 1.0) ** k
            out = {name: 0.0 for name in cl.names}
            out["etat0"] = fac
            return out
        cases.append(("xk_dy on projective-x' chart", DoubleChart,
                      lambda L: xk_dy(L, 0), "etat0", exp_double_y))

    def exp_dz(cd, cl):
        out = {name: 0.0 for name in cl.names}
        out["z0"] = 1.0
        return out

    cases.append(("dz lifts to dz", DoubleChart, dz, "z0", exp_dz))

    def exp_double_x(cd, cl):
        # d_st - k x^{k-1} st d_st + x^k d_x; for b >= 1 the chain rule adds
        # the same-shape term -k x^{k-1} etat_j d_etat_j
        out = {name: 0.0 for name in cl.names}
        out["st"] = 1.0 - k * cd["x"] ** (k - 1) * cd["st"]
        out["x"] = cd["x"] ** k
        for j in range(geom.b):
            out[f"etat{j}"] = -k * cd["x"] ** (k - 1) * cd[f"etat{j}"]
        return out

    cases.append(("xk_dx with x defining function", DoubleChartX,
                  xk_dx, "st", exp_double_x))

    def exp_double_x_y(cd, cl):
        out = {name: 0.0 for name in cl.names}
        out["etat0"] = 1.0
        out["y0"] = cd["x"] ** k
        return out

    if geom.b > 0:
        cases.append(("xk_dy with x defining function", DoubleChartX,
                      lambda L: xk_dy(L, 0), "etat0", exp_double_x_y))
    return cases


def verify_double_lifts(geom: GeometryParams, samples: int = 100, seed: int = 0,
                        rtol: float = 1e-8):
    """Compare numeric lifts with the closed forms at random chart points."""
    rng = np.random.default_rng(seed)
    rows = []
    for label, chart_cls, field_factory, _, expected in lift_cases_double(geom):
        chart = chart_cls(geom)
        field = field_factory(chart.base_layout)
        worst = 0.0
        tried = 0
        while tried < samples:
            c = _random_chart_point(rng, chart)
            if not chart.valid(c):
                continue
            tried += 1
            w = lift_field_numeric(field, chart, c)
            cd = chart.chart_layout.unpack(c)
            exp = expected(cd, chart.chart_layout)
            expv = chart.chart_layout.pack(exp)
            scale = max(1.0, np.max(np.abs(expv)))
            worst = max(worst, float(np.max(np.abs(w - expv)) / scale))
        rows.append({"case": label, "chart": chart.name, "samples": samples,
                     "max_rel_err": worst, "pass": worst < rtol})
    return rows


def _random_chart_point(rng, chart: Chart):
    d = {}
    for name in chart.chart_layout.names:
        if name in ("xp", "x"):
            d[name] = float(rng.uniform(0.05, 0.6))
        elif name in ("T", "Tt"):
            d[name] = float(rng.uniform(0.2, 2.0))
        elif name == "s":
            d[name] = float(rng.uniform(0.3, 3.0))
        elif name in ("st", "St"):
            d[name] = float(rng.uniform(-0.8, 0.8))
        else:
            d[name] = float(rng.uniform(-0.7, 0.7))
    return chart.chart_layout.pack(d)


# ---------------------------------------------------------------------------
# heat-space lift verification
# ---------------------------------------------------------------------------

def heat_lift_check(geom: GeometryParams, samples: int = 50, seed: int = 1):
    """Verify the scalar pieces of the lifted heat operator on the ff chart.

    Exact pieces are checked numerically at random points:
      tau d_x   -> Tt d_st
      t d_t     -> (1/2) Tt d_Tt
    and the multiplication factors tau*kf/(2x) and tau*x^{-k}*mu - Tt*mu are
    driven to 0 at shrinking x'; the fitted decay exponent must reach at
    least 0.9*min(1, k-1).
    """
    rng = np.random.default_rng(seed)
    chart = FfChart(geom)
    L = chart.base_layout
    k, f = geom.k, geom.f

    tau_dx = coordinate_field(L, {"x": lambda d: np.sqrt(d["t"])})
    t_dt = coordinate_field(L, {"t": lambda d: d["t"]})

    worst_dx = worst_dt = 0.0
    tried = 0
    while tried < samples:
        c = _random_chart_point(rng, chart)
        if not chart.valid(c):
            continue
        tried += 1
        cd = chart.chart_layout.unpack(c)
        w = lift_field_numeric(tau_dx, chart, c)
        exp = np.zeros(chart.chart_layout.dim)
        exp[chart.chart_layout.index["st"]] = cd["Tt"]
        worst_dx = max(worst_dx, float(np.max(np.abs(w - exp)) / max(1.0, cd["Tt"])))
        w = lift_field_numeric(t_dt, chart, c)
        exp = np.zeros(chart.chart_layout.dim)
        exp[chart.chart_layout.index["Tt"]] = 0.5 * cd["Tt"]
        worst_dt = max(worst_dt, float(np.max(np.abs(w - exp)) / max(1.0, cd["Tt"])))

    # multiplication factors at fixed (Tt, st), shrinking x'
    Tt0, st0, mu = 1.3, 0.4, 2.5
    xps = np.geomspace(1e-1, 1e-3, 12)
    d_pot = []
    d_mode = []
    for xp in xps:
        x = xp + xp ** k * st0
        tau = Tt0 * xp ** k
        d_pot.append(abs(tau * k * f / (2.0 * x)))
        d_mode.append(abs(tau * x ** (-k) * mu - Tt0 * mu))
    rate_pot = _fit_loglog(xps, d_pot)
    rate_mode = _fit_loglog(xps, d_mode)
    target = 0.9 * min(1.0, k - 1.0)
    return {
        "tau_dx_max_err": worst_dx,
        "t_dt_max_err": worst_dt,
        "pot_decay_rate": rate_pot,
        "mode_decay_rate": rate_mode,
        "rate_target": target,
        "pass": bool(worst_dx < 1e-8 and worst_dt < 1e-8
                     and rate_pot >= target and rate_mode >= target),
    }


def _fit_loglog(xs, ys):
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(coef[0])
