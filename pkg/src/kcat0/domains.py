"""Convex domain catalog for C^d with boundary-distance oracles.

Domains are immutable trees built from catalog nodes (disks, half-planes,
sectors, balls, polydisks, products, affine images, intersections) plus
smooth convex graph domains ``{r < 0}``.  Every node answers:

* ``contains(z)``          strict interior membership,
* ``delta(z)``             Euclidean distance to the boundary,
* ``delta_dir(z, v)``      distance to the boundary inside the complex
                           line ``z + C v`` (ambient Euclidean units),
* ``slice(p, v)``          the planar set ``{t : p + t v in D}``,
* ``support_upper(a)``     an upper bound for ``sup Re<z, a>`` over the
                           domain (``+inf`` when unbounded in that
                           direction), used to build certified
                           half-plane bounds.

All values are immutable after construction and all queries are pure, so
instances are safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyWindow,
    InvalidDomain,
    OutsideDomain,
)
from .points import as_point, point_from_json, point_to_json

_TWO_PI = 2.0 * math.pi

# Direction grid used by numeric fallbacks; fixed seed keeps results
# reproducible across runs.
_FALLBACK_SEED = 0x5EC7


def _real_view(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def _from_real(x: np.ndarray) -> np.ndarray:
    d = x.shape[0] // 2
    return x[:d] + 1j * x[d:]


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, _TWO_PI)
    if a <= -math.pi:
        a += _TWO_PI
    elif a > math.pi:
        a -= _TWO_PI
    return a


def ray_boundary(inside: Callable[[np.ndarray], bool], start: np.ndarray,
                 direction: np.ndarray, t_max: float = 1e12,
                 rtol: float = 1e-13) -> float:
    """Distance along ``start + t*direction`` to the boundary of ``{inside}``.

    ``start`` must satisfy ``inside``; returns ``inf`` when the whole ray
    stays inside up to ``t_max``.  Plain bracketing plus bisection; the
    oracle is the only thing we assume about the set.
    """
    t = 1.0
    # shrink first in case the boundary is very close
    while not inside(start + t * direction):
        t *= 0.5
        if t < 1e-300:
            return 0.0
    lo = t
    hi = t
    while inside(start + hi * direction):
        hi *= 2.0
        if hi > t_max:
            return math.inf
    lo = hi / 2.0
    for _ in range(200):
        if hi - lo <= rtol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if inside(start + mid * direction):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ray_boundary_batch(contains_batch: Callable[[np.ndarray], np.ndarray],
                       start: np.ndarray, directions: np.ndarray,
                       t_max: float = 1e9) -> np.ndarray:
    """Vectorized ray shooting: one boundary parameter per direction row."""
    n = directions.shape[0]
    t = np.ones(n)
    pts = start[None, :] + t[:, None] * directions
    ins = contains_batch(pts)
    # shrink rows starting outside
    for _ in range(80):
        if ins.all():
            break
        t[~ins] *= 0.5
        pts = start[None, :] + t[:, None] * directions
        ins = contains_batch(pts)
    lo = t.copy()
    hi = t.copy()
    alive = np.ones(n, dtype=bool)
    for _ in range(64):
        pts = start[None, :] + hi[:, None] * directions
        ins = contains_batch(pts)
        grow = ins & alive
        if not grow.any():
            break
        lo[grow] = hi[grow]
        hi[grow] *= 2.0
        alive &= hi <= t_max
    unbounded = hi > t_max
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        pts = start[None, :] + mid[:, None] * directions
        ins = contains_batch(pts)
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    out = 0.5 * (lo + hi)
    out[unbounded] = np.inf
    return out


# ---------------------------------------------------------------------------
# defining functions
# ---------------------------------------------------------------------------


class RealPolynomial:
    """Multivariate polynomial in the real coordinates (Re z_1, Im z_1, ...).

    Stored as a monomial table ``{(e_1, ..., e_2d): coefficient}``; this is
    also the JSON wire format for graph-domain defining functions.
    """

    def __init__(self, dimension: int, terms: dict[tuple[int, ...], float]):
        self.dimension = int(dimension)
        self.terms = {tuple(int(e) for e in k): float(c)
                      for k, c in terms.items() if c != 0.0}
        for k in self.terms:
            if len(k) != 2 * self.dimension:
                raise InvalidDomain("monomial exponent length must be 2*d")

    def __call__(self, z) -> float:
        z = as_point(z, self.dimension)
        x = _real_view(z)
        # interleave as (x1, y1, x2, y2, ...): exponents are keyed that way
        coords = np.empty(2 * self.dimension)
        coords[0::2] = x[: self.dimension]
        coords[1::2] = x[self.dimension:]
        total = 0.0
        for expo, c in self.terms.items():
            total += c * float(np.prod(coords ** np.array(expo)))
        return total

    def evaluate_batch(self, Z: np.ndarray) -> np.ndarray:
        coords = np.empty((Z.shape[0], 2 * self.dimension))
        coords[:, 0::2] = Z.real
        coords[:, 1::2] = Z.imag
        total = np.zeros(Z.shape[0])
        for expo, c in self.terms.items():
            total += c * np.prod(coords ** np.array(expo), axis=1)
        return total

    def gradient(self, z) -> np.ndarray:
        """Real gradient in (Re z_1, ..., Re z_d, Im z_1, ..., Im z_d) order."""
        z = as_point(z, self.dimension)
        coords = np.empty(2 * self.dimension)
        coords[0::2] = z.real
        coords[1::2] = z.imag
        grad_inter = np.zeros(2 * self.dimension)
        for expo, c in self.terms.items():
            e = np.array(expo)
            for j in range(2 * self.dimension):
                if e[j] == 0:
                    continue
                e2 = e.copy()
                e2[j] -= 1
                grad_inter[j] += c * e[j] * float(np.prod(coords ** e2))
        out = np.empty(2 * self.dimension)
        out[: self.dimension] = grad_inter[0::2]
        out[self.dimension:] = grad_inter[1::2]
        return out

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "monomials": [
                {"exponents": list(k), "coefficient": c}
                for k, c in sorted(self.terms.items())
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "RealPolynomial":
        terms = {tuple(m["exponents"]): m["coefficient"] for m in data["monomials"]}
        return RealPolynomial(data["dimension"], terms)


@dataclass(frozen=True)
class DefiningFunction:
    """Smooth convex defining function r with {r < 0} the domain.

    ``evaluate`` maps a C^d point to a real; ``gradient`` returns the real
    gradient (d/dRe, then d/dIm); when absent it is approximated by central
    differences.  ``polynomial`` enables exact symbolic manipulation.
    """

    dimension: int
    evaluate: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    polynomial: RealPolynomial | None = None

    @staticmethod
    def from_polynomial(poly: RealPolynomial) -> "DefiningFunction":
        return DefiningFunction(
            dimension=poly.dimension,
            evaluate=poly,
            gradient=poly.gradient,
            polynomial=poly,
        )

    def value(self, z) -> float:
        return float(self.evaluate(as_point(z, self.dimension)))

    def grad(self, z) -> np.ndarray:
        z = as_point(z, self.dimension)
        if self.gradient is not None:
            return np.asarray(self.gradient(z), dtype=float)
        h = 1e-6
        x0 = _real_view(z)
        g = np.empty(2 * self.dimension)
        for j in range(2 * self.dimension):
            e = np.zeros_like(x0)
            e[j] = h
            g[j] = (self.value(_from_real(x0 + e)) - self.value(_from_real(x0 - e))) / (2 * h)
        return g

    def complex_gradient(self, z) -> np.ndarray:
        """d r / d z_j = (d/dx_j - i d/dy_j)/2."""
        g = self.grad(z)
        d = self.dimension
        return 0.5 * (g[:d] - 1j * g[d:])


# ---------------------------------------------------------------------------
# the node tree
# ---------------------------------------------------------------------------


class ConvexDomain:
    """Abstract base for catalog nodes and graph domains."""

    dimension: int
    catalog: bool = True

    # -- membership ---------------------------------------------------------

    def contains(self, z) -> bool:
        """Strict interior membership; boundary points answer False."""
        z = as_point(z, self.dimension)
        return self._contains(z)

    def contains_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        return np.array([self._contains(z) for z in Z])

    def _contains(self, z: np.ndarray) -> bool:
        raise NotImplementedError

    # -- boundary distances --------------------------------------------------

    def delta(self, z) -> float:
        """Euclidean distance from an interior point to the boundary."""
        z = as_point(z, self.dimension)
        if not self._contains(z):
            raise OutsideDomain(f"point {z} is not interior to the domain")
        return self._delta(z)

    def _delta(self, z: np.ndarray) -> float:
        raise NotImplementedError

    def delta_dir(self, z, v) -> float:
        """Distance to the boundary within the complex line z + Cv."""
        z = as_point(z, self.dimension)
        v = as_point(v, self.dimension)
        if not np.any(v):
            raise InvalidDomain("direction v must be nonzero")
        if not self._contains(z):
            raise OutsideDomain(f"point {z} is not interior to the domain")
        if self.dimension == 1:
            return self._delta(z)  # the only complex line is the whole plane
        sl = self.slice(z, v)
        return float(np.linalg.norm(v)) * sl.planar_delta(0.0)

    def delta_dir_batch(self, Z: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Per-row delta_dir; nodes with closed forms override this."""
        return np.array([self.delta_dir(z, v) for z, v in zip(Z, V)])

    # -- slices ---------------------------------------------------------------

    def slice(self, p, v) -> "PlanarSlice":
        """The planar set {t in C : p + t v in D} with its own oracles."""
        p = as_point(p, self.dimension)
        v = as_point(v, self.dimension)
        if not np.any(v):
            raise InvalidDomain("direction v must be nonzero")
        planar = self._slice_set(p, v)
        # the exact-chart tag marks structural catalog slices only; derived
        # exact treatments (lens reductions) do not set it
        return PlanarSlice(base=p, direction=v, planar=planar,
                           exact_chart=isinstance(planar, (Disk, HalfPlane, Sector)))

    def _slice_set(self, p: np.ndarray, v: np.ndarray) -> "ConvexDomain":
        raise NotImplementedError

    # -- misc -----------------------------------------------------------------

    @property
    def c_proper(self) -> bool:
        raise NotImplementedError

    def anchor(self) -> np.ndarray:
        """Some interior point, used as a ray-shooting origin."""
        raise NotImplementedError

    def support_upper(self, a) -> float:
        """Upper bound for sup_{z in D} Re<z, a>; +inf when unbounded."""
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:  # compact structural form, good for reports
        return f"{type(self).__name__}(d={self.dimension})"


def _hdot(z: np.ndarray, a: np.ndarray) -> complex:
    """Hermitian pairing <z, a> = sum z_j conj(a_j) (holomorphic in z)."""
    return complex(np.sum(z * np.conj(a)))


# -- planar catalog nodes ----------------------------------------------------


class Disk(ConvexDomain):
    def __init__(self, center: complex = 0.0, radius: float = 1.0):
        if radius <= 0:
            raise InvalidDomain("disk radius must be positive")
        self.center = complex(center)
        self.radius = float(radius)
        self.dimension = 1

    def _contains(self, z):
        return abs(z[0] - self.center) < self.radius

    def contains_batch(self, Z):
        return np.abs(Z[:, 0] - self.center) < self.radius

    def _delta(self, z):
        return self.radius - abs(z[0] - self.center)

    def _slice_set(self, p, v):
        return Disk((self.center - p[0]) / v[0], self.radius / abs(v[0]))

    @property
    def c_proper(self):
        return True

    def anchor(self):
        return as_point([self.center])

    def support_upper(self, a):
        a = as_point(a, 1)
        return (self.center * np.conj(a[0])).real + self.radius * abs(a[0])

    def to_spec(self):
        return {"type": "disk",
                "center": [self.center.real, self.center.imag],
                "radius": self.radius}


class HalfPlane(ConvexDomain):
    """{z : Re((z - p) conj(n)) > 0} with unit inward normal n."""

    def __init__(self, boundary_point: complex = 0.0, inward_normal: complex = 1j):
        n = complex(inward_normal)
        if n == 0:
            raise InvalidDomain("inward normal must be nonzero")
        self.boundary_point = complex(boundary_point)
        self.inward_normal = n / abs(n)
        self.dimension = 1

    def _contains(self, z):
        return ((z[0] - self.boundary_point) * np.conj(self.inward_normal)).real > 0

    def contains_batch(self, Z):
        return ((Z[:, 0] - self.boundary_point) * np.conj(self.inward_normal)).real > 0

    def _delta(self, z):
        return ((z[0] - self.boundary_point) * np.conj(self.inward_normal)).real

    def _slice_set(self, p, v):
        m = np.conj(v[0]) * self.inward_normal
        c0 = ((p[0] - self.boundary_point) * np.conj(self.inward_normal)).real
        # slice is {t : Re(t conj(m)) > -c0}
        bp = -c0 * m / abs(m) ** 2
        return HalfPlane(bp, m)

    @property
    def c_proper(self):
        return True

    def anchor(self):
        return as_point([self.boundary_point + self.inward_normal])

    def support_upper(self, a):
        a = as_point(a, 1)
        u = a[0] / abs(a[0])
        if abs(u + self.inward_normal) < 1e-12:
            return (self.boundary_point * np.conj(a[0])).real
        return math.inf

    def to_spec(self):
        return {"type": "halfplane",
                "boundary_point": [self.boundary_point.real, self.boundary_point.imag],
                "inward_normal": [self.inward_normal.real, self.inward_normal.imag]}


class Sector(ConvexDomain):
    """vertex + {z : arg z in (alpha, beta)} with opening in (0, pi).

    Opening exactly pi is canonicalized to a HalfPlane by the ``sector``
    factory, keeping the power-map chart single-valued here.
    """

    def __init__(self, vertex: complex = 0.0, alpha: float = 0.0, beta: float = math.pi / 2):
        if not 0 < beta - alpha < math.pi + 1e-15:
            raise InvalidDomain("sector opening must lie in (0, pi]")
        self.vertex = complex(vertex)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.dimension = 1

    @property
    def opening(self) -> float:
        return self.beta - self.alpha

    def _contains(self, z):
        w = z[0] - self.vertex
        if w == 0:
            return False
        a = _wrap_angle(np.angle(w) - self.alpha)
        return 0 < a < self.opening

    def contains_batch(self, Z):
        w = Z[:, 0] - self.vertex
        ang = np.angle(w * np.exp(-1j * self.alpha))
        ang = np.where(ang <= -math.pi, ang + _TWO_PI, ang)
        return (w != 0) & (ang > 0) & (ang < self.opening)

    def _ray_distance(self, w: complex, theta: float) -> float:
        u = w * np.exp(-1j * theta)
        return abs(u.imag) if u.real >= 0 else abs(u)

    def _delta(self, z):
        w = z[0] - self.vertex
        return min(self._ray_distance(w, self.alpha), self._ray_distance(w, self.beta))

    def _slice_set(self, p, v):
        rot = np.angle(v[0])
        return Sector((self.vertex - p[0]) / v[0], self.alpha - rot, self.beta - rot)

    @property
    def c_proper(self):
        return True

    def anchor(self):
        mid = 0.5 * (self.alpha + self.beta)
        return as_point([self.vertex + np.exp(1j * mid)])

    def support_upper(self, a):
        a = as_point(a, 1)
        theta = float(np.angle(a[0]))
        rel = (theta - self.alpha) % _TWO_PI
        if rel < self.opening:
            return math.inf  # theta points into the cone
        # otherwise the sup is finite only when no cone direction has a
        # positive component along theta
        maxcos = max(math.cos(_wrap_angle(self.alpha - theta)),
                     math.cos(_wrap_angle(self.beta - theta)))
        if maxcos > 1e-15:
            return math.inf
        return (self.vertex * np.conj(a[0])).real

    def to_spec(self):
        return {"type": "sector",
                "vertex": [self.vertex.real, self.vertex.imag],
                "alpha": self.alpha, "beta": self.beta}


def sector(vertex: complex = 0.0, alpha: float = 0.0, beta: float = math.pi / 2) -> ConvexDomain:
    """Sector factory; an opening of exactly pi becomes a HalfPlane."""
    opening = beta - alpha
    if not 0 < opening <= math.pi + 1e-12:
        raise InvalidDomain("sector opening must lie in (0, pi]")
    if abs(opening - math.pi) <= 1e-12:
        mid = 0.5 * (alpha + beta)
        return HalfPlane(vertex, np.exp(1j * mid))
    return Sector(vertex, alpha, beta)


def upper_half_plane() -> HalfPlane:
    return HalfPlane(0.0, 1j)


def right_half_plane() -> HalfPlane:
    return HalfPlane(0.0, 1.0)


def unit_disk() -> Disk:
    return Disk(0.0, 1.0)


# -- higher-dimensional catalog nodes ----------------------------------------


class Ball(ConvexDomain):
    def __init__(self, center, radius: float = 1.0):
        if radius <= 0:
            raise InvalidDomain("ball radius must be positive")
        self.center = as_point(center)
        self.radius = float(radius)
        self.dimension = self.center.shape[0]

    def _contains(self, z):
        return float(np.linalg.norm(z - self.center)) < self.radius

    def contains_batch(self, Z):
        return np.linalg.norm(Z - self.center[None, :], axis=1) < self.radius

    def _delta(self, z):
        return self.radius - float(np.linalg.norm(z - self.center))

    def _slice_disk(self, p, v):
        """The slice of a ball is always a disk in the parameter plane."""
        w = p - self.center
        nv2 = float(np.vdot(v, v).real)
        wv = _hdot(w, v)  # <w, v>
        center = -wv / nv2
        rho2 = (self.radius ** 2 - float(np.vdot(w, w).real)) / nv2 + abs(wv) ** 2 / nv2 ** 2
        if rho2 <= 0:
            raise OutsideDomain("complex line does not meet the ball")
        return Disk(center, math.sqrt(rho2))

    def _slice_set(self, p, v):
        return self._slice_disk(p, v)

    def delta_dir_batch(self, Z, V):
        W = Z - self.center[None, :]
        nv2 = np.sum(np.abs(V) ** 2, axis=1)
        wv = np.sum(W * np.conj(V), axis=1)
        rho2 = (self.radius ** 2 - np.sum(np.abs(W) ** 2, axis=1)) / nv2 + np.abs(wv) ** 2 / nv2 ** 2
        rho = np.sqrt(np.maximum(rho2, 0.0))
        return np.sqrt(nv2) * (rho - np.abs(wv) / nv2)

    @property
    def c_proper(self):
        return True

    def anchor(self):
        return self.center.copy()

    def support_upper(self, a):
        a = as_point(a, self.dimension)
        return _hdot(self.center, a).real + self.radius * float(np.linalg.norm(a))

    def to_spec(self):
        return {"type": "ball", "center": point_to_json(self.center),
                "radius": self.radius}


class Polydisk(ConvexDomain):
    def __init__(self, centers, radii):
        self.centers = as_point(centers)
        self.radii = np.asarray(radii, dtype=float)
        if self.radii.shape != self.centers.shape or np.any(self.radii <= 0):
            raise InvalidDomain("polydisk needs one positive radius per center")
        self.dimension = self.centers.shape[0]

    def _contains(self, z):
        return bool(np.all(np.abs(z - self.centers) < self.radii))

    def contains_batch(self, Z):
        return np.all(np.abs(Z - self.centers[None, :]) < self.radii[None, :], axis=1)

    def _delta(self, z):
        return float(np.min(self.radii - np.abs(z - self.centers)))

    def _slice_set(self, p, v):
        disks = []
        for j in range(self.dimension):
            if v[j] == 0:
                continue  # coordinate pinned at p_j, already inside
            disks.append(Disk((self.centers[j] - p[j]) / v[j], self.radii[j] / abs(v[j])))
        return intersection(disks)

    def delta_dir_batch(self, Z, V):
        # per coordinate: disk slice distance, +inf when v_j = 0
        W = Z - self.centers[None, :]
        out = np.full(Z.shape[0], np.inf)
        for j in range(self.dimension):
            vj = V[:, j]
            mask = vj != 0
            if not mask.any():
                continue
            cj = (self.centers[j] - Z[mask, j]) / vj[mask]
            rj = self.radii[j] / np.abs(vj[mask])
            dj = (rj - np.abs(cj)) * np.abs(vj[mask])
            out[mask] = np.minimum(out[mask], dj)
        return out

    @property
    def c_proper(self):
        return True

    def anchor(self):
        return self.centers.copy()

    def support_upper(self, a):
        a = as_point(a, self.dimension)
        return float(np.sum((self.centers * np.conj(a)).real + self.radii * np.abs(a)))

    def to_spec(self):
        return {"type": "polydisk", "centers": point_to_json(self.centers),
                "radii": [float(r) for r in self.radii]}


class Product(ConvexDomain):
    def __init__(self, left: ConvexDomain, right: ConvexDomain):
        self.left = left
        self.right = right
        self.dimension = left.dimension + right.dimension
        self.catalog = left.catalog and right.catalog

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d1 = self.left.dimension
        return z[:d1], z[d1:]

    def _contains(self, z):
        z1, z2 = self.split(z)
        return self.left._contains(z1) and self.right._contains(z2)

    def contains_batch(self, Z):
        d1 = self.left.dimension
        return self.left.contains_batch(Z[:, :d1]) & self.right.contains_batch(Z[:, d1:])

    def _delta(self, z):
        z1, z2 = self.split(z)
        return min(self.left._delta(z1), self.right._delta(z2))

    def _slice_set(self, p, v):
        d1 = self.left.dimension
        p1, p2 = p[:d1], p[d1:]
        v1, v2 = v[:d1], v[d1:]
        pieces = []
        if np.any(v1):
            pieces.append(self.left.slice(p1, v1).planar)
        if np.any(v2):
            pieces.append(self.right.slice(p2, v2).planar)
        return intersection(pieces)

    def delta_dir_batch(self, Z, V):
        d1 = self.left.dimension
        out = np.full(Z.shape[0], np.inf)
        m1 = np.any(V[:, :d1] != 0, axis=1)
        m2 = np.any(V[:, d1:] != 0, axis=1)
        if m1.any():
            out[m1] = self.left.delta_dir_batch(Z[m1, :d1], V[m1, :d1])
        if m2.any():
            out[m2] = np.minimum(out[m2], self.right.delta_dir_batch(Z[m2, d1:], V[m2, d1:]))
        return out

    @property
    def c_proper(self):
        return self.left.c_proper and self.right.c_proper

    def anchor(self):
        return np.concatenate([self.left.anchor(), self.right.anchor()])

    def support_upper(self, a):
        a = as_point(a, self.dimension)
        d1 = self.left.dimension
        return self.left.support_upper(a[:d1]) + self.right.support_upper(a[d1:])

    def factors(self) -> list[ConvexDomain]:
        out = []
        for part in (self.left, self.right):
            if isinstance(part, Product):
                out.extend(part.factors())
            else:
                out.append(part)
        return out

    def to_spec(self):
        return {"type": "product", "left": self.left.to_spec(),
                "right": self.right.to_spec()}


class AffineImage(ConvexDomain):
    """{A z + b : z in inner} for an invertible complex matrix A."""

    def __init__(self, matrix, offset, inner: ConvexDomain):
        A = np.asarray(matrix, dtype=complex)
        if A.shape != (inner.dimension, inner.dimension):
            raise InvalidDomain("matrix shape must match the inner dimension")
        if abs(np.linalg.det(A)) < 1e-300:
            raise InvalidDomain("affine matrix must be invertible")
        self.matrix = A
        self.offset = as_point(offset, inner.dimension)
        self.inner = inner
        self.inverse = np.linalg.inv(A)
        self.dimension = inner.dimension
        self.catalog = inner.catalog
        # conformal factor when A is a scalar multiple of a unitary matrix
        gram = A.conj().T @ A
        s2 = gram[0, 0].real
        if np.allclose(gram, s2 * np.eye(self.dimension), atol=1e-12 * max(1.0, s2)):
            self._conformal_scale = math.sqrt(s2)
        else:
            self._conformal_scale = None

    def pull_back(self, z: np.ndarray) -> np.ndarray:
        return self.inverse @ (z - self.offset)

    def push_forward(self, z: np.ndarray) -> np.ndarray:
        return self.matrix @ z + self.offset

    def _contains(self, z):
        return self.inner._contains(self.pull_back(z))

    def contains_batch(self, Z):
        W = (Z - self.offset[None, :]) @ self.inverse.T
        return self.inner.contains_batch(W)

    def _delta(self, z):
        w = self.pull_back(z)
        if self._conformal_scale is not None:
            return self._conformal_scale * self.inner._delta(w)
        return _delta_numeric(self, z)

    def _slice_set(self, p, v):
        # the parameter plane is preserved exactly under the pullback
        return self.inner.slice(self.pull_back(p), self.inverse @ v).planar

    def delta_dir_batch(self, Z, V):
        W = (Z - self.offset[None, :]) @ self.inverse.T
        U = V @ self.inverse.T
        base = self.inner.delta_dir_batch(W, U)
        # rescale from parameter-plane units back to ambient units
        return base * np.linalg.norm(V, axis=1) / np.linalg.norm(U, axis=1)

    @property
    def c_proper(self):
        return self.inner.c_proper

    def anchor(self):
        return self.push_forward(self.inner.anchor())

    def support_upper(self, a):
        a = as_point(a, self.dimension)
        inner_sup = self.inner.support_upper(self.matrix.conj().T @ a)
        return _hdot(self.offset, a).real + inner_sup

    def to_spec(self):
        return {"type": "affine_image",
                "matrix": [[c.real, c.imag] for c in self.matrix.reshape(-1)],
                "offset": point_to_json(self.offset),
                "inner": self.inner.to_spec()}


class Intersection(ConvexDomain):
    def __init__(self, members: Sequence[ConvexDomain]):
        members = list(members)
        if not members:
            raise InvalidDomain("intersection needs at least one member")
        d = members[0].dimension
        if any(m.dimension != d for m in members):
            raise DimensionMismatch("intersection members must share a dimension")
        self.members = members
        self.dimension = d
        self.catalog = all(m.catalog for m in members)

    def _contains(self, z):
        return all(m._contains(z) for m in self.members)

    def contains_batch(self, Z):
        out = self.members[0].contains_batch(Z)
        for m in self.members[1:]:
            out = out & m.contains_batch(Z)
        return out

    def _delta(self, z):
        return min(m._delta(z) for m in self.members)

    def _slice_set(self, p, v):
        return intersection([m.slice(p, v).planar for m in self.members])

    def delta_dir_batch(self, Z, V):
        out = self.members[0].delta_dir_batch(Z, V)
        for m in self.members[1:]:
            out = np.minimum(out, m.delta_dir_batch(Z, V))
        return out

    @property
    def c_proper(self):
        # a subset of a C-proper set is C-proper; sufficient, not necessary
        return any(m.c_proper for m in self.members)

    def anchor(self):
        candidates = [m.anchor() for m in self.members]
        candidates.append(np.mean(candidates, axis=0))
        for c in candidates:
            if self._contains(c):
                return c
        # maximize the joint boundary distance from the best starting guess
        from scipy.optimize import minimize as _minimize

        def neg_depth(x):
            z = _from_real(x)
            vals = []
            for m in self.members:
                vals.append(m._delta(z) if m._contains(z) else
                            -ray_dist_outside(m, z))
            return -min(vals)

        best = min(candidates, key=lambda c: neg_depth(_real_view(c)))
        res = _minimize(neg_depth, _real_view(best), method="Nelder-Mead",
                        options={"maxiter": 400, "fatol": 1e-12})
        z = _from_real(res.x)
        if not self._contains(z):
            raise EmptyWindow("could not locate an interior point of the intersection")
        return z

    def support_upper(self, a):
        return min(m.support_upper(a) for m in self.members)

    def to_spec(self):
        return {"type": "intersection",
                "members": [m.to_spec() for m in self.members]}


def ray_dist_outside(D: ConvexDomain, z: np.ndarray) -> float:
    """Rough penetration depth for points outside D (anchor-directed)."""
    try:
        a = D.anchor()
    except Exception:
        return 1.0
    return float(np.linalg.norm(z - a))


def intersection(members: Sequence[ConvexDomain]) -> ConvexDomain:
    """Intersection factory: flattens nesting and drops trivial wrappers."""
    flat: list[ConvexDomain] = []
    for m in members:
        if isinstance(m, Intersection):
            flat.extend(m.members)
        else:
            flat.append(m)
    if not flat:
        raise InvalidDomain("intersection needs at least one member")
    if len(flat) == 1:
        return flat[0]
    reduced = reduce_planar_intersection(flat) if flat[0].dimension == 1 else None
    if reduced is not None:
        return reduced
    return Intersection(flat)


def reduce_planar_intersection(members: list[ConvexDomain]) -> ConvexDomain | None:
    """Structural reductions among planar disks/half-planes.

    Removes members that contain another member (they cannot bind) and
    collapses a single survivor.  Returns None when no reduction applies.
    """
    if any(not isinstance(m, (Disk, HalfPlane, Sector)) for m in members):
        return None

    def covers(a: ConvexDomain, b: ConvexDomain) -> bool:
        # b subset of a makes a redundant in the intersection; a pairwise
        # containment test is a sound sufficient criterion
        if isinstance(a, Disk) and isinstance(b, Disk):
            return abs(b.center - a.center) + b.radius <= a.radius + 1e-15
        if isinstance(a, HalfPlane) and isinstance(b, Disk):
            margin = ((b.center - a.boundary_point) * np.conj(a.inward_normal)).real
            return margin >= b.radius - 1e-15
        return False

    keep = []
    for i, m in enumerate(members):
        redundant = any(j != i and covers(m, other)
                        for j, other in enumerate(members))
        if not redundant:
            keep.append(m)
    if not keep:
        keep = [members[0]]
    if len(keep) == 1:
        return keep[0]
    if len(keep) != len(members):
        return Intersection(keep)
    return None


class Graph(ConvexDomain):
    """{z : r(z) < 0} for a smooth convex defining function r.

    C-properness is a user declaration; structural detection is out of
    reach for oracle-defined boundaries.
    """

    catalog = False

    def __init__(self, r: DefiningFunction, interior_point, c_proper: bool = True,
                 bounding_radius: float | None = None):
        self.r = r
        self.dimension = r.dimension
        self._interior = as_point(interior_point, r.dimension)
        self._c_proper = bool(c_proper)
        self.bounding_radius = bounding_radius
        self._support_cache: dict[bytes, float] = {}
        if r.value(self._interior) >= 0:
            raise InvalidDomain("declared interior point has r >= 0")

    def _contains(self, z):
        return self.r.value(z) < 0

    def contains_batch(self, Z):
        if self.r.polynomial is not None:
            return self.r.polynomial.evaluate_batch(Z) < 0
        return np.array([self.r.value(z) for z in Z]) < 0

    def _delta(self, z):
        from scipy.optimize import minimize as _minimize

        g = self.r.grad(z)
        gz = _from_real(g)
        if not np.any(gz):
            gz = self._interior - z if np.any(self._interior - z) else as_point([1.0] * self.dimension)
        u = gz / np.linalg.norm(gz)
        t0 = ray_boundary(lambda w: self.r.value(w) < 0, z, u)
        x0 = z + t0 * u

        def objective(xr):
            return float(np.sum((xr - _real_view(z)) ** 2))

        def obj_grad(xr):
            return 2.0 * (xr - _real_view(z))

        cons = {"type": "eq",
                "fun": lambda xr: self.r.value(_from_real(xr)),
                "jac": lambda xr: self.r.grad(_from_real(xr))}
        res = _minimize(objective, _real_view(x0), jac=obj_grad, method="SLSQP",
                        constraints=[cons], options={"maxiter": 200, "ftol": 1e-16})
        best = t0
        if res.success or res.status == 8:
            xr = _from_real(res.x)
            direction = xr - z
            norm = np.linalg.norm(direction)
            if norm > 0:
                # polish along the optimal direction: second order in the
                # direction error, so this recovers ~1e-12 accuracy
                t = ray_boundary(lambda w: self.r.value(w) < 0, z, direction / norm)
                best = min(best, t)
        return best

    def _slice_set(self, p, v):
        r = self.r

        def member(t: complex) -> bool:
            return r.value(p + t * v) < 0

        return PlanarOracle(member, label="graph-slice")

    @property
    def c_proper(self):
        return self._c_proper

    def anchor(self):
        return self._interior.copy()

    def support_upper(self, a):
        from scipy.optimize import minimize as _minimize

        a = as_point(a, self.dimension)
        key = a.tobytes()
        if key in self._support_cache:
            return self._support_cache[key]
        R = self.bounding_radius or self._probe_radius()
        if not math.isfinite(R):
            self._support_cache[key] = math.inf
            return math.inf

        def neg(xr):
            return -float(_hdot(_from_real(xr), a).real)

        cons = {"type": "ineq", "fun": lambda xr: -self.r.value(_from_real(xr))}
        res = _minimize(neg, _real_view(self._interior), method="SLSQP",
                        constraints=[cons], options={"maxiter": 200, "ftol": 1e-14})
        val = -res.fun if res.success else _hdot(self._interior, a).real + R * np.linalg.norm(a)
        out = float(val) + 1e-9 * max(1.0, abs(val))
        self._support_cache[key] = out
        return out

    def _probe_radius(self) -> float:
        rng = np.random.default_rng(_FALLBACK_SEED)
        worst = 0.0
        for _ in range(4 * self.dimension):
            u = rng.normal(size=2 * self.dimension)
            u = _from_real(u / np.linalg.norm(u))
            t = ray_boundary(lambda w: self.r.value(w) < 0, self._interior, u, t_max=1e6)
            if not math.isfinite(t):
                return math.inf
            worst = max(worst, t)
        return float(np.linalg.norm(self._interior)) + 2.0 * worst

    def to_spec(self):
        if self.r.polynomial is None:
            raise InvalidDomain("only polynomial graph domains serialize to JSON")
        return {"type": "graph",
                "polynomial": self.r.polynomial.to_json(),
                "c_proper": self._c_proper,
                "interior_point": point_to_json(self._interior)}


class PlanarOracle(ConvexDomain):
    """Planar convex set known only through a membership oracle.

    Produced by slicing non-catalog domains; boundary distances fall back
    to ray shooting over a direction grid with golden-section refinement.
    """

    catalog = False

    def __init__(self, member: Callable[[complex], bool], label: str = "oracle",
                 anchor_hint: complex | None = None):
        self.member = member
        self.label = label
        self.dimension = 1
        self._anchor_hint = anchor_hint
        self._anchor_cache: complex | None = None
        self._boundary_cache: dict[int, np.ndarray] = {}

    def _contains(self, z):
        return bool(self.member(complex(z[0])))

    def contains_batch(self, Z):
        return np.array([bool(self.member(complex(z))) for z in Z[:, 0]])

    def _delta(self, z):
        z0 = complex(z[0])
        inside = lambda w: self.member(complex(w[0]))
        grid = np.linspace(0.0, _TWO_PI, 96, endpoint=False)
        ts = np.array([ray_boundary(inside, np.array([z0]), np.array([np.exp(1j * a)]))
                       for a in grid])
        finite = np.isfinite(ts)
        if not finite.any():
            return math.inf
        order = np.argsort(np.where(finite, ts, np.inf))

        def t_of(a: float) -> float:
            return ray_boundary(inside, np.array([z0]), np.array([np.exp(1j * a)]))

        best = math.inf
        for k in order[:3]:
            a0 = grid[k]
            lo, hi = a0 - grid[1], a0 + grid[1]
            for _ in range(60):  # golden-section on the angle
                m1 = lo + 0.381966011250105 * (hi - lo)
                m2 = hi - 0.381966011250105 * (hi - lo)
                if t_of(m1) <= t_of(m2):
                    hi = m2
                else:
                    lo = m1
            best = min(best, t_of(0.5 * (lo + hi)))
        return best

    def _slice_set(self, p, v):
        member = self.member
        return PlanarOracle(lambda t: member(complex(p[0] + t * v[0])), label=self.label)

    @property
    def c_proper(self):
        return True  # oracle sets arise as slices of C-proper domains

    def anchor(self):
        if self._anchor_cache is not None:
            return as_point([self._anchor_cache])
        if self._anchor_hint is not None and self.member(self._anchor_hint):
            self._anchor_cache = self._anchor_hint
            return as_point([self._anchor_cache])
        for radius in np.geomspace(1e-3, 1e3, 25):
            for a in np.linspace(0.0, _TWO_PI, 64, endpoint=False):
                cand = radius * np.exp(1j * a)
                if self.member(cand):
                    self._anchor_cache = complex(cand)
                    return as_point([self._anchor_cache])
        if self.member(0.0):
            self._anchor_cache = 0.0
            return as_point([0.0])
        raise EmptyWindow(f"could not find an interior point of {self.label}")

    def boundary_points(self, n: int = 256) -> np.ndarray:
        if n in self._boundary_cache:
            return self._boundary_cache[n]
        z0 = self.anchor()[0]
        inside = lambda w: self.member(complex(w[0]))
        out = []
        for a in np.linspace(0.0, _TWO_PI, n, endpoint=False):
            t = ray_boundary(inside, np.array([z0]), np.array([np.exp(1j * a)]), t_max=1e8)
            if math.isfinite(t):
                out.append(z0 + t * np.exp(1j * a))
        result = np.asarray(out, dtype=complex)
        self._boundary_cache[n] = result
        return result

    def support_upper(self, a):
        a = as_point(a, 1)
        pts = self.boundary_points(512)
        if pts.size == 0:
            return math.inf
        vals = (pts * np.conj(a[0])).real
        mesh = float(np.max(np.abs(np.diff(np.r_[pts, pts[:1]]))))
        # sampled support: inflate by one mesh cell to stay on the safe side
        return float(np.max(vals)) + mesh * abs(a[0]) + 1e-9

    def to_spec(self):
        raise InvalidDomain("oracle planar sets are not serializable")


def _delta_numeric(D: ConvexDomain, z: np.ndarray) -> float:
    """Boundary distance by direction search; used when no closed form exists."""
    from scipy.optimize import minimize as _minimize

    inside = lambda w: D._contains(w)
    rng = np.random.default_rng(_FALLBACK_SEED)
    n = 128 if D.dimension == 1 else 512
    dirs = rng.normal(size=(n, 2 * D.dimension))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    ts = np.array([ray_boundary(inside, z, _from_real(u)) for u in dirs])
    order = np.argsort(ts)

    def t_of(x):
        nx = np.linalg.norm(x)
        if nx == 0:
            return math.inf
        return ray_boundary(inside, z, _from_real(x / nx))

    best = float(ts[order[0]])
    for k in order[:4]:
        res = _minimize(t_of, dirs[k], method="Nelder-Mead",
                        options={"maxiter": 300, "fatol": 1e-13, "xatol": 1e-10})
        best = min(best, float(res.fun))
    return best


@dataclass
class PlanarSlice:
    """The planar set {t in C : p + t v in D}.

    ``exact_chart`` is set only when the slice is structurally a catalog
    planar node; oracle-backed slices report honest numerics instead.
    ``planar_delta`` works in parameter-plane units, so
    ``delta_dir = |v| * planar_delta(0)``.
    """

    base: np.ndarray
    direction: np.ndarray
    planar: ConvexDomain
    exact_chart: bool

    def contains_param(self, t: complex) -> bool:
        return self.planar.contains([t])

    def planar_delta(self, t: complex) -> float:
        return self.planar.delta([t])


# ---------------------------------------------------------------------------
# JSON specification round trip
# ---------------------------------------------------------------------------


def domain_to_json(D: ConvexDomain) -> dict:
    return D.to_spec()


def domain_from_json(data: dict) -> ConvexDomain:
    kind = data["type"]
    if kind == "disk":
        return Disk(complex(*data["center"]), data["radius"])
    if kind == "halfplane":
        return HalfPlane(complex(*data["boundary_point"]), complex(*data["inward_normal"]))
    if kind == "sector":
        return sector(complex(*data["vertex"]), data["alpha"], data["beta"])
    if kind == "ball":
        return Ball(point_from_json(data["center"]), data["radius"])
    if kind == "polydisk":
        return Polydisk(point_from_json(data["centers"]), data["radii"])
    if kind == "product":
        return Product(domain_from_json(data["left"]), domain_from_json(data["right"]))
    if kind == "affine_image":
        inner = domain_from_json(data["inner"])
        d = inner.dimension
        flat = [complex(re_, im_) for re_, im_ in data["matrix"]]
        A = np.array(flat, dtype=complex).reshape(d, d)
        return AffineImage(A, point_from_json(data["offset"]), inner)
    if kind == "intersection":
        return intersection([domain_from_json(m) for m in data["members"]])
    if kind == "graph":
        poly = RealPolynomial.from_json(data["polynomial"])
        return Graph(DefiningFunction.from_polynomial(poly),
                     point_from_json(data["interior_point"]),
                     c_proper=data.get("c_proper", True))
    raise InvalidDomain(f"unknown domain type {kind!r}")
