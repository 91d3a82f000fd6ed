"""m-convexity analysis and line type of boundary points.

A C-proper convex domain is locally m-convex on a window when
``delta(z, v) <= C * delta(z)^(1/m)`` for all window points z and nonzero
directions v.  The checks here are empirical: they sample, fit the
log-log exponent, track the best constant per boundary-distance decade,
and flag divergence (the polydisk's flat face is the canonical failure).

Line type is the sup of the vanishing order of ``r o l`` over complex
affine lines l through a boundary point; polynomial defining functions
get an exact symbolic order, everything else a slope estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domains import ConvexDomain, DefiningFunction, RealPolynomial
from .errors import DegenerateInput, EmptyWindow, InvalidDomain, OrderNotResolved
from .points import as_point, point_to_json

ORDER_CAP = 16
SLOPE_RESIDUAL_TOL = 0.1
DIVERGENCE_FACTOR = 4.0


@dataclass(frozen=True)
class AffineLine:
    """l(t) = base + t * direction, a nontrivial affine map C -> C^d."""

    base: np.ndarray
    direction: np.ndarray

    def __call__(self, t: complex) -> np.ndarray:
        return self.base + t * self.direction


@dataclass
class MConvexitySample:
    z: np.ndarray
    v: np.ndarray
    delta: float
    delta_dir: float


@dataclass
class MConvexityReport:
    samples: list
    fitted_exponent: float
    fitted_constant: float
    window_radius: float
    target_m: int | None
    empirical_c: float
    verdict: str                      # pass | fail
    diverging: bool = False
    decade_constants: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "schema": "kcat0/1",
            "kind": "m-convexity-report",
            "window_radius": self.window_radius,
            "target_m": self.target_m,
            "fitted_exponent": {"value": self.fitted_exponent,
                                "method": ["loglog-least-squares"], "tol": 0.02},
            "fitted_constant": {"value": self.fitted_constant,
                                "method": ["loglog-least-squares"], "tol": None},
            "empirical_c": {"value": self.empirical_c,
                            "method": ["sample-sup"], "tol": None},
            "verdict": self.verdict,
            "diverging": self.diverging,
            "decade_constants": {str(k): v for k, v in sorted(self.decade_constants.items())},
            "sample_count": len(self.samples),
        }


@dataclass
class LineTypeResult:
    base_point: np.ndarray
    line_type: float                  # integer or math.inf
    extremal_direction: np.ndarray
    per_line_orders: list             # (direction, order) pairs

    def to_json(self) -> dict:
        return {
            "schema": "kcat0/1",
            "kind": "line-type-result",
            "base_point": point_to_json(self.base_point),
            "line_type": None if math.isinf(self.line_type) else int(self.line_type),
            "infinite_type": bool(math.isinf(self.line_type)),
            "extremal_direction": point_to_json(self.extremal_direction),
            "per_line_orders": [
                {"direction": point_to_json(d),
                 "order": None if math.isinf(nu) else int(nu)}
                for d, nu in self.per_line_orders
            ],
        }


# ---------------------------------------------------------------------------
# exponent fitting
# ---------------------------------------------------------------------------


def exponent_fit(D: ConvexDomain, boundary_point, approach_direction,
                 tangent_direction, eps_grid=None) -> MConvexityReport:
    """Fit the exponent of delta_dir against delta along a boundary approach.

    Samples z_eps = p + eps * u for eps in the grid and regresses
    log(delta_dir) on log(delta); for a boundary point of an m-convex
    domain the slope approximates 1/m.
    """
    p = as_point(boundary_point, D.dimension)
    u = as_point(approach_direction, D.dimension)
    v = as_point(tangent_direction, D.dimension)
    if not np.any(v):
        raise InvalidDomain("tangent direction must be nonzero")
    u = u / np.linalg.norm(u)
    if eps_grid is None:
        eps_grid = np.geomspace(1e-2, 1e-6, 9)

    samples = []
    for eps in eps_grid:
        z = p + eps * u
        if not D.contains(z):
            continue
        samples.append(MConvexitySample(z, v, D.delta(z), D.delta_dir(z, v)))
    if len(samples) < 3:
        raise EmptyWindow("fewer than 3 valid samples along the approach ray")

    logs_d = np.log([s.delta for s in samples])
    logs_dd = np.log([s.delta_dir for s in samples])
    slope, intercept = np.polyfit(logs_d, logs_dd, 1)
    verdict = "pass" if 0.0 < slope <= 1.0 + 1e-9 else "fail"
    return MConvexityReport(
        samples=samples,
        fitted_exponent=float(slope),
        fitted_constant=float(np.exp(intercept)),
        window_radius=float(np.max(np.abs([np.linalg.norm(s.z) for s in samples]))),
        target_m=None,
        empirical_c=float(np.max([s.delta_dir / math.sqrt(s.delta) for s in samples]))
        if np.all([s.delta > 0 for s in samples]) else math.inf,
        verdict=verdict,
    )


def _window_samples(D: ConvexDomain, R: float, count: int, rng) -> list[np.ndarray]:
    """Uniform interior samples of B(0, R) intersected with the domain."""
    d = D.dimension
    out = []
    tries = 0
    while len(out) < count and tries < 200 * count:
        tries += 1
        raw = rng.normal(size=2 * d)
        raw /= np.linalg.norm(raw)
        radius = R * rng.uniform() ** (1.0 / (2 * d))
        z = (raw[:d] + 1j * raw[d:]) * radius
        if D.contains(z):
            out.append(z)
    if not out:
        raise EmptyWindow("no interior samples found in the window")
    return out


def _boundary_probes(D: ConvexDomain, R: float, rng, rays: int = 12):
    """Points marching toward boundary pieces inside the window."""
    from .domains import ray_boundary

    anchor = D.anchor()
    probes = []
    for _ in range(rays):
        raw = rng.normal(size=2 * D.dimension)
        raw /= np.linalg.norm(raw)
        u = raw[: D.dimension] + 1j * raw[D.dimension:]
        t_dom = ray_boundary(lambda w: D.contains(w), anchor, u)
        if not math.isfinite(t_dom):
            continue
        b = anchor + t_dom * u
        if np.linalg.norm(b) > R:
            continue  # boundary met outside the window
        for eps in np.geomspace(1e-1, 1e-6, 6):
            z = b + eps * (anchor - b)
            if np.linalg.norm(z) <= R and D.contains(z):
                probes.append(z)
    return probes


def local_m_convex_check(D: ConvexDomain, window_radius: float, m: float,
                         sample_count: int = 400, seed: int = 0,
                         target_c: float | None = None) -> MConvexityReport:
    """Empirical local m-convexity check on the window B(0, R).

    Reports the smallest constant consistent with all samples and a
    per-decade table of constants; a constant that keeps growing as
    delta shrinks is flagged as diverging (fail).
    """
    if m < 1:
        raise InvalidDomain("m must be at least 1")
    rng = np.random.default_rng(seed)
    zs = _window_samples(D, window_radius, sample_count, rng)
    zs += _boundary_probes(D, window_radius, rng)

    d = D.dimension
    axes = [np.eye(d, dtype=complex)[j] for j in range(d)]
    samples: list[MConvexitySample] = []
    for z in zs:
        vs = list(axes)
        raw = rng.normal(size=2 * d)
        raw /= np.linalg.norm(raw)
        vs.append(raw[:d] + 1j * raw[d:])
        for v in vs:
            delta = D.delta(z)
            delta_dir = D.delta_dir(z, v)
            samples.append(MConvexitySample(z, v, delta, delta_dir))

    ratios = np.array([s.delta_dir / s.delta ** (1.0 / m) for s in samples])
    deltas = np.array([s.delta for s in samples])
    empirical_c = float(np.max(ratios))

    decades: dict[int, float] = {}
    for r, dl in zip(ratios, deltas):
        k = int(math.floor(math.log10(dl)))
        decades[k] = max(decades.get(k, 0.0), float(r))
    keys = sorted(decades)
    diverging = False
    if len(keys) >= 3:
        small, large = decades[keys[0]], decades[keys[-1]]
        diverging = small > DIVERGENCE_FACTOR * large

    logs_d = np.log(deltas)
    logs_dd = np.log([s.delta_dir for s in samples])
    slope = float(np.polyfit(logs_d, logs_dd, 1)[0])

    verdict = "pass"
    if diverging:
        verdict = "fail"
    if target_c is not None and empirical_c > target_c:
        verdict = "fail"
    return MConvexityReport(
        samples=samples,
        fitted_exponent=slope,
        fitted_constant=empirical_c,
        window_radius=window_radius,
        target_m=int(m) if float(m).is_integer() else None,
        empirical_c=empirical_c,
        verdict=verdict,
        diverging=diverging,
        decade_constants=decades,
    )


# ---------------------------------------------------------------------------
# vanishing order and line type
# ---------------------------------------------------------------------------


def _symbolic_order(poly: RealPolynomial, line: AffineLine) -> int:
    import sympy

    d = poly.dimension
    s, tau = sympy.symbols("s tau", real=True)
    subs = []
    for j in range(d):
        xj = (line.base[j].real + s * line.direction[j].real - tau * line.direction[j].imag)
        yj = (line.base[j].imag + s * line.direction[j].imag + tau * line.direction[j].real)
        subs.extend([xj, yj])
    expr = sympy.Integer(0)
    for expo, c in poly.terms.items():
        term = sympy.Float(c, 30)
        for var, e in zip(subs, expo):
            if e:
                term *= var ** e
        expr += term
    expr = sympy.expand(expr)
    if expr == 0:
        raise OrderNotResolved("the defining function vanishes identically on the line")
    p = sympy.Poly(expr, s, tau)
    degrees = []
    for monom, coeff in zip(p.monoms(), p.coeffs()):
        if abs(float(coeff)) > 1e-12:
            degrees.append(sum(monom))
    if not degrees:
        raise OrderNotResolved("all substituted coefficients vanish numerically")
    return int(min(degrees))


def _numeric_order_estimate(r: DefiningFunction, line: AffineLine,
                            radii=None, angles: int = 8) -> float:
    """Slope of log max_theta |r(l(rho e^i theta))| against log rho."""
    if radii is None:
        radii = np.geomspace(1e-2, 1e-5, 7)
    thetas = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
    logs_r, logs_v = [], []
    for rho in radii:
        vals = [abs(r.value(line(rho * np.exp(1j * th)))) for th in thetas]
        top = max(vals)
        if top <= 0.0:
            continue
        logs_r.append(math.log(rho))
        logs_v.append(math.log(top))
    if len(logs_r) < 3:
        return math.inf  # the function is flatter than any tracked order
    return float(np.polyfit(logs_r, logs_v, 1)[0])


def vanishing_order(r: DefiningFunction, line: AffineLine) -> int:
    """Order of vanishing of r o l at 0; symbolic for polynomial r."""
    base_val = r.value(line(0.0))
    scale = max(1.0, max(abs(c) for c in (*line.base, 1.0)))
    if abs(base_val) > 1e-9 * scale:
        raise InvalidDomain("the line base point must lie on the boundary {r = 0}")
    if not np.any(line.direction):
        raise DegenerateInput("line direction must be nonzero")
    if r.polynomial is not None:
        return _symbolic_order(r.polynomial, line)
    slope = _numeric_order_estimate(r, line)
    if math.isinf(slope):
        raise OrderNotResolved("numeric order exceeds every tracked scale")
    nearest = round(slope)
    if abs(slope - nearest) > SLOPE_RESIDUAL_TOL:
        raise OrderNotResolved(f"order not resolved: slope {slope:.3f} is not "
                               f"within {SLOPE_RESIDUAL_TOL} of an integer")
    return int(nearest)


def _tangent_basis(r: DefiningFunction, x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complex tangent space at the boundary point."""
    grad = r.complex_gradient(x)
    if np.linalg.norm(grad) < 1e-12:
        raise InvalidDomain("gradient of r vanishes: not a defining function here")
    d = r.dimension
    _, _, vh = np.linalg.svd(grad[None, :].conj())
    return vh[1:].conj().T  # columns span {w : sum dr/dz_j w_j = 0}


def line_type(r: DefiningFunction, x, grid_size: int = 256,
              refine_rounds: int = 3, cap: int = ORDER_CAP) -> LineTypeResult:
    """Sup of vanishing orders over complex tangent lines through x.

    Orders beyond ``cap`` (numeric path) are reported as infinite type.
    Transversal lines vanish to first order, so the sup is attained on the
    complex tangent space whenever the dimension exceeds one.
    """
    x = as_point(x, r.dimension)
    if r.dimension == 1:
        e = np.array([1.0 + 0.0j])
        return LineTypeResult(x, 1, e, [(e, 1)])

    basis = _tangent_basis(r, x)
    k = basis.shape[1]

    def directions(count: int, center=None, spread: float = 1.0):
        rng = np.random.default_rng(0xA11CE)
        if k == 1:
            phases = np.linspace(0.0, math.pi, count, endpoint=False)
            base = np.exp(1j * phases)[:, None]
        else:
            raw = rng.normal(size=(count, 2 * k))
            base = raw[:, :k] + 1j * raw[:, k:]
            base /= np.linalg.norm(base, axis=1, keepdims=True)
        if center is not None:
            base = center[None, :] + spread * base
            base /= np.linalg.norm(base, axis=1, keepdims=True)
        return base

    def order_of(u: np.ndarray) -> float:
        w = basis @ u
        line = AffineLine(x, w)
        if r.polynomial is not None:
            try:
                return float(_symbolic_order(r.polynomial, line))
            except OrderNotResolved:
                return math.inf
        est = _numeric_order_estimate(r, line)
        if est > cap:
            return math.inf
        nearest = round(est)
        if abs(est - nearest) > SLOPE_RESIDUAL_TOL:
            raise OrderNotResolved(f"order not resolved along {w}: slope {est:.3f}")
        return float(nearest)

    per_line = []
    best_u, best_order = None, -math.inf
    us = directions(grid_size if k > 1 else min(grid_size, 16))
    for rounds in range(refine_rounds + 1):
        for u in us:
            nu = order_of(u)
            per_line.append((basis @ u, nu))
            if nu > best_order:
                best_order, best_u = nu, u
        if math.isinf(best_order) or k == 1:
            break
        us = directions(32, center=best_u, spread=0.5 ** (rounds + 1))

    extremal = basis @ best_u
    value = math.inf if best_order > cap else best_order
    return LineTypeResult(x, value, extremal, per_line)
