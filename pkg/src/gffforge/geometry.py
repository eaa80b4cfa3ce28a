"""Planar domains, conformal maps, test functions, mollifiers, quadrature.

Points are plain complex numbers throughout.  Maps evaluate on scalars or
numpy arrays and carry analytic derivatives and inverses, so pullbacks of
test functions never need numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError

__all__ = [
    "UnitDisk",
    "UpperHalfPlane",
    "SemiDisk",
    "HalfPlaneAnnulus",
    "Ball",
    "ConformalMap",
    "Mobius",
    "Rotation",
    "Scaling",
    "Inversion",
    "JoukowskiLike",
    "Composition",
    "Support",
    "TestFunction",
    "MollifierProfile",
    "mobius_to_disk",
    "halfplane_annulus_map",
    "pullback_test_function",
    "shrink_radius",
    "gauss_legendre",
    "mollifier",
    "disk_bump",
    "radial_annulus_bump",
    "integrate_test_function",
]


def _as_complex(z):
    return np.asarray(z, dtype=np.complex128)


# ---------------------------------------------------------------------------
# model domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitDisk:
    def contains(self, z) -> np.ndarray:
        return np.abs(_as_complex(z)) < 1.0

    @property
    def bbox(self):
        return (-1.0, 1.0, -1.0, 1.0)


@dataclass(frozen=True)
class UpperHalfPlane:
    def contains(self, z) -> np.ndarray:
        return _as_complex(z).imag > 0.0

    @property
    def bbox(self):
        return (-np.inf, np.inf, 0.0, np.inf)


@dataclass(frozen=True)
class SemiDisk:
    """Upper half-disk of radius 1/sqrt(u) about the origin."""

    u: float

    def __post_init__(self):
        if not self.u > 0:
            raise DomainError("SemiDisk requires u > 0")

    @property
    def radius(self) -> float:
        return 1.0 / np.sqrt(self.u)

    def contains(self, z) -> np.ndarray:
        z = _as_complex(z)
        return (z.imag > 0.0) & (np.abs(z) < self.radius)

    @property
    def bbox(self):
        r = self.radius
        return (-r, r, 0.0, r)


@dataclass(frozen=True)
class HalfPlaneAnnulus:
    """Half-plane annulus: SemiDisk(s) minus the closure of SemiDisk(r).

    Needs s < r, so the inner radius 1/sqrt(r) is smaller than the outer
    radius 1/sqrt(s).
    """

    r: float
    s: float

    def __post_init__(self):
        if not (0 < self.s < self.r):
            raise DomainError("HalfPlaneAnnulus requires 0 < s < r")

    @property
    def inner_radius(self) -> float:
        return 1.0 / np.sqrt(self.r)

    @property
    def outer_radius(self) -> float:
        return 1.0 / np.sqrt(self.s)

    def contains(self, z) -> np.ndarray:
        z = _as_complex(z)
        a = np.abs(z)
        return (z.imag > 0.0) & (a > self.inner_radius) & (a < self.outer_radius)

    @property
    def bbox(self):
        r = self.outer_radius
        return (-r, r, 0.0, r)


@dataclass(frozen=True)
class Ball:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("Ball requires radius > 0")

    def contains(self, z) -> np.ndarray:
        return np.abs(_as_complex(z) - self.center) < self.radius

    @property
    def bbox(self):
        c, r = self.center, self.radius
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)


# ---------------------------------------------------------------------------
# conformal maps
# ---------------------------------------------------------------------------


class ConformalMap:
    """Base class: callable on complex scalars/arrays, with analytic
    derivative and an exact inverse map."""

    def __call__(self, z):
        raise NotImplementedError

    def derivative(self, z):
        raise NotImplementedError

    def inverse(self) -> "ConformalMap":
        raise NotImplementedError


@dataclass(frozen=True)
class Mobius(ConformalMap):
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) == 0:
            raise DomainError("Mobius coefficients are degenerate (ad - bc = 0)")

    def __call__(self, z):
        z = _as_complex(z)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        z = _as_complex(z)
        det = self.a * self.d - self.b * self.c
        return det / (self.c * z + self.d) ** 2

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)


@dataclass(frozen=True)
class Rotation(ConformalMap):
    alpha: float

    def __call__(self, z):
        return _as_complex(z) * np.exp(1j * self.alpha)

    def derivative(self, z):
        z = _as_complex(z)
        return np.full_like(z, np.exp(1j * self.alpha))

    def inverse(self) -> "Rotation":
        return Rotation(-self.alpha)


@dataclass(frozen=True)
class Scaling(ConformalMap):
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError("Scaling requires c > 0")

    def __call__(self, z):
        return _as_complex(z) * self.c

    def derivative(self, z):
        z = _as_complex(z)
        return np.full_like(z, self.c)

    def inverse(self) -> "Scaling":
        return Scaling(1.0 / self.c)


@dataclass(frozen=True)
class Inversion(ConformalMap):
    """z -> -1/z, an involution of the upper half-plane."""

    def __call__(self, z):
        return -1.0 / _as_complex(z)

    def derivative(self, z):
        return 1.0 / _as_complex(z) ** 2

    def inverse(self) -> "Inversion":
        return Inversion()


@dataclass(frozen=True)
class JoukowskiLike(ConformalMap):
    """z -> z + r^2/z on the upper half-plane outside the radius-r disk.

    Sends the upper semicircle of radius r to the real segment [-2r, 2r]:
    r*e^(i*theta) maps to 2r*cos(theta).
    """

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("JoukowskiLike requires r > 0")

    def __call__(self, z):
        z = _as_complex(z)
        return z + self.r**2 / z

    def derivative(self, z):
        z = _as_complex(z)
        return 1.0 - self.r**2 / z**2

    def inverse(self) -> "JoukowskiInverse":
        return JoukowskiInverse(self.r)


@dataclass(frozen=True)
class JoukowskiInverse(ConformalMap):
    """Branch of w/2 + sqrt(w^2/4 - r^2) landing outside the radius-r disk."""

    r: float

    def __call__(self, w):
        w = _as_complex(w)
        s = np.sqrt(w * w / 4.0 - self.r**2)
        z_plus = w / 2.0 + s
        z_minus = w / 2.0 - s
        # the two roots multiply to r^2; exactly one lies outside |z| = r
        return np.where(np.abs(z_plus) >= np.abs(z_minus), z_plus, z_minus)

    def derivative(self, w):
        z = self(w)
        return 1.0 / (1.0 - self.r**2 / z**2)

    def inverse(self) -> JoukowskiLike:
        return JoukowskiLike(self.r)


@dataclass(frozen=True)
class Composition(ConformalMap):
    """Apply ``maps`` left to right: Composition([f, g])(z) = g(f(z))."""

    maps: tuple

    def __init__(self, maps: Sequence[ConformalMap]):
        object.__setattr__(self, "maps", tuple(maps))
        if not self.maps:
            raise DomainError("Composition needs at least one map")

    def __call__(self, z):
        w = _as_complex(z)
        for m in self.maps:
            w = m(w)
        return w

    def derivative(self, z):
        w = _as_complex(z)
        d = np.ones_like(w)
        for m in self.maps:
            d = d * m.derivative(w)
            w = m(w)
        return d

    def inverse(self) -> "Composition":
        return Composition([m.inverse() for m in reversed(self.maps)])


def mobius_to_disk(z0: complex) -> Mobius:
    """Disk automorphism sending z0 to 0 with positive real derivative there.

    F(w) = (w - z0) / (1 - conj(z0) w), so F'(z0) = 1 / (1 - |z0|^2) > 0.
    """
    z0 = complex(z0)
    if not abs(z0) < 1:
        raise DomainError("mobius_to_disk needs |z0| < 1")
    return Mobius(1.0, -z0, -np.conj(z0), 1.0)


def halfplane_annulus_map(r: float) -> JoukowskiLike:
    """Map from the half-plane outside the radius-r semicircle onto the
    half-plane, folding the semicircle into the segment [-2r, 2r]."""
    return JoukowskiLike(r)


def shrink_radius(z: complex, eps: float, n_boundary: int = 720, tol: float = 1e-9) -> float:
    """Largest r such that mobius_to_disk(z) pulls B_0(r) back inside B_z(eps).

    Bisection on r; containment is checked on a dense sampling of the
    boundary circle (Mobius preimages of circles are circles, so the max
    over the sampled boundary converges quadratically in the mesh).
    """
    z = complex(z)
    if not abs(z) < 1:
        raise DomainError("shrink_radius needs |z| < 1")
    if not 0 < eps < 1.0 - abs(z):
        raise DomainError("shrink_radius needs 0 < eps < d(z, boundary)")
    finv = mobius_to_disk(z).inverse()
    t = np.linspace(0.0, 2.0 * np.pi, n_boundary, endpoint=False)
    ring = np.exp(1j * t)

    def contained(r: float) -> bool:
        return bool(np.max(np.abs(finv(r * ring) - z)) <= eps)

    lo, hi = 0.0, 1.0 - 1e-12
    if contained(hi):
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if contained(mid):
            lo = mid
        else:
            hi = mid
    return lo


def gauss_legendre(n: int, a: float, b: float):
    """Gauss-Legendre nodes and weights on [a, b]."""
    if n < 1:
        raise DomainError("gauss_legendre needs n >= 1")
    if not b > a:
        raise DomainError("gauss_legendre needs b > a")
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Support:
    """Support descriptor: bounding box, membership test, and a boundary
    sampler used to transport the box through conformal maps."""

    bbox: tuple
    contains: Callable[[np.ndarray], np.ndarray]
    boundary: Callable[[int], np.ndarray] = None

    def boundary_points(self, n: int = 256) -> np.ndarray:
        if self.boundary is not None:
            return self.boundary(n)
        x0, x1, y0, y1 = self.bbox
        t = np.linspace(0.0, 1.0, n // 4, endpoint=False)
        edges = [
            x0 + t * (x1 - x0) + 1j * y0,
            x1 + 1j * (y0 + t * (y1 - y0)),
            x1 - t * (x1 - x0) + 1j * y1,
            x0 + 1j * (y1 - t * (y1 - y0)),
        ]
        return np.concatenate(edges)


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported observable phi: C -> R.

    ``radial`` marks profiles that are rotation invariant about the origin,
    as (r_lo, r_hi, profile); pairings of such functions collapse to 1-D
    integrals.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    support: Support
    smooth: bool = True
    label: str = ""
    radial: tuple | None = None

    def __call__(self, z):
        z = _as_complex(z)
        return np.asarray(self.evaluator(z), dtype=float)


def _smooth_profile(t, beta: float = 1.0):
    """exp(-beta / (t (1 - t))) on (0, 1), zero outside; all derivatives
    vanish at both endpoints."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0.0) & (t < 1.0)
    ti = t[inside]
    out[inside] = np.exp(-beta / (ti * (1.0 - ti)))
    return out


def disk_bump(center: complex, radius: float, height: float = 1.0, label: str = "") -> TestFunction:
    """Radially symmetric bump supported on B_center(radius)."""
    if not radius > 0:
        raise DomainError("disk_bump needs radius > 0")
    center = complex(center)

    def ev(z):
        rr2 = (np.abs(z - center) / radius) ** 2
        out = np.zeros_like(rr2)
        inside = rr2 < 1.0
        # exp(1) rescales the classical exp(-1/(1-r^2)) profile to peak at 1
        out[inside] = height * np.exp(1.0) * np.exp(-1.0 / (1.0 - rr2[inside]))
        return out

    def boundary(n):
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return center + radius * np.exp(1j * t)

    sup = Support(
        bbox=(center.real - radius, center.real + radius, center.imag - radius, center.imag + radius),
        contains=lambda z: np.abs(_as_complex(z) - center) < radius,
        boundary=boundary,
    )
    radial = None
    if center == 0:
        def rprof(r):
            return ev(np.asarray(r, dtype=float) + 0j)

        radial = (0.0, radius, rprof)
    return TestFunction(
        ev, sup, smooth=True, label=label or f"bump({center:.3g},{radius:.3g})", radial=radial
    )


def radial_annulus_bump(
    delta: float,
    height: float = 1.0,
    normalize: bool = False,
    inner: float | None = None,
    outer: float | None = None,
) -> TestFunction:
    """Radial plateau bump hugging the unit circle from inside.

    Equal to ``height`` for 1 - delta <= |z| <= 1 - delta/2, zero outside a
    delta/10 neighbourhood of that annulus, with smoothstep shoulders.  With
    ``normalize`` the profile is divided by its 2-D integral.  ``inner`` and
    ``outer`` override the plateau radii.
    """
    if not 0 < delta < 1:
        raise DomainError("radial_annulus_bump needs delta in (0, 1)")
    r_lo = 1.0 - delta if inner is None else inner
    r_hi = 1.0 - delta / 2.0 if outer is None else outer
    pad = delta / 10.0
    step = _smoothstep

    def profile(r):
        r = np.asarray(r, dtype=float)
        up = step((r - (r_lo - pad)) / pad)
        down = 1.0 - step((r - r_hi) / pad)
        return height * up * down

    scale = 1.0
    if normalize:
        rr, ww = gauss_legendre(256, max(r_lo - pad, 0.0), r_hi + pad)
        scale = 1.0 / (2.0 * np.pi * np.sum(ww * rr * profile(rr)))

    def ev(z):
        return scale * profile(np.abs(z))

    lo, hi = max(r_lo - pad, 0.0), r_hi + pad

    def boundary(n):
        t = np.linspace(0.0, 2.0 * np.pi, n // 2, endpoint=False)
        return np.concatenate([lo * np.exp(1j * t), hi * np.exp(1j * t)])

    sup = Support(
        bbox=(-hi, hi, -hi, hi),
        contains=lambda z: (np.abs(_as_complex(z)) > lo) & (np.abs(_as_complex(z)) < hi),
        boundary=boundary,
    )

    def rprof(r):
        return scale * profile(r)

    return TestFunction(
        ev,
        sup,
        smooth=True,
        label=f"annulus_bump(delta={delta:.3g})",
        radial=(lo, hi, rprof),
    )


def pullback_test_function(phi: TestFunction, f: ConformalMap) -> TestFunction:
    """Transport phi under f so that integrals against fields are preserved:
    phi^f(z) = |(f^{-1})'(z)|^2 * phi(f^{-1}(z))."""
    finv = f.inverse()

    def ev(z):
        w = finv(z)
        return np.abs(finv.derivative(z)) ** 2 * phi(w)

    pts = f(phi.support.boundary_points(512))
    pad = 1e-9 + 1e-3 * (np.max(np.abs(pts)) if pts.size else 1.0)
    bbox = (
        float(pts.real.min() - pad),
        float(pts.real.max() + pad),
        float(pts.imag.min() - pad),
        float(pts.imag.max() + pad),
    )

    def boundary(n):
        return f(phi.support.boundary_points(n))

    sup = Support(
        bbox=bbox,
        contains=lambda z: phi.support.contains(finv(z)),
        boundary=boundary,
    )
    return TestFunction(ev, sup, smooth=phi.smooth, label=f"{phi.label}^f")


def integrate_test_function(phi: TestFunction, n: int = 256) -> float:
    """Plane integral of phi by tensor Gauss-Legendre over its bounding box."""
    x0, x1, y0, y1 = phi.support.bbox
    gx, wx = gauss_legendre(n, x0, x1)
    gy, wy = gauss_legendre(n, y0, y1)
    zz = gx[:, None] + 1j * gy[None, :]
    return float(np.sum(wx[:, None] * wy[None, :] * phi(zz)))


# ---------------------------------------------------------------------------
# mollifiers
# ---------------------------------------------------------------------------

_N_CDF_TABLE = 16385


def _profile_table(beta: float):
    """Cumulative table of the normalized bump exp(-beta/(x(1-x)))."""
    x = np.linspace(0.0, 1.0, _N_CDF_TABLE)
    vals = _smooth_profile(x, beta)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(x))])
    norm = cdf[-1]
    return x, norm, cdf / norm


def _norm_constant(beta: float) -> float:
    return _tables(beta)[1]


_TABLES: dict = {}


def _tables(beta: float):
    if beta not in _TABLES:
        _TABLES[beta] = _profile_table(beta)
    return _TABLES[beta]


def _smoothstep(t, beta: float = 1.0):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, integrated bump between."""
    x, _, cdf = _tables(beta)
    return np.interp(np.clip(np.asarray(t, dtype=float), 0.0, 1.0), x, cdf)


_PROFILE_BETAS = {"default": 1.0, "sharp": 2.0}


@dataclass(frozen=True)
class MollifierProfile:
    """Bump eta of unit mass on (0, 1) and the matching angular cutoff.

    ``chi`` equals 1 on [delta, pi - delta], vanishes on [0, delta/2] and
    [pi - delta/2, pi], and interpolates with the integrated bump, so both
    pieces are infinitely differentiable.
    """

    delta: float
    beta: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < np.pi / 2:
            raise DomainError("mollifier needs 0 < delta < pi/2")

    def eta(self, x):
        # closed form; the norm constant comes from the tabulated cumulative,
        # which is spectrally accurate because every derivative of the bump
        # vanishes at 0 and 1
        return _smooth_profile(x, self.beta) / _norm_constant(self.beta)

    def eta_scaled(self, x):
        """eta compressed onto (0, delta), still of unit mass."""
        return self.eta(np.asarray(x, dtype=float) / self.delta) / self.delta

    def chi(self, theta):
        th = np.asarray(theta, dtype=float)
        d = self.delta
        rise = _smoothstep((th - d / 2.0) / (d / 2.0), self.beta)
        fall = _smoothstep(((np.pi - th) - d / 2.0) / (d / 2.0), self.beta)
        return rise * fall


def mollifier(delta: float, profile: str = "default") -> MollifierProfile:
    """Mollifier pair (eta, chi) at scale delta.

    ``profile`` picks the bump family; "default" is exp(-1/(x(1-x))),
    "sharp" squeezes the same shape with a doubled exponent.  Downstream
    limits must not depend on the choice.
    """
    if profile not in _PROFILE_BETAS:
        raise DomainError(f"unknown mollifier profile {profile!r}")
    return MollifierProfile(delta, beta=_PROFILE_BETAS[profile])
