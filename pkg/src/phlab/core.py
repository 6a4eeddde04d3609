"""Maps, product systems and their exactly-known derivative data.

The chaotic factor ``A`` and the rotations act on 64-bit fixed-point
coordinates, so their orbits are exact; the Morse-Smale center map acts on a
float coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional, Sequence

import mpmath
import numpy as np

from . import kernels
from .fixedpoint import MASK, SCALE, TorusCoord, to_raw

TWO_PI = 2.0 * math.pi
_DPS = 50
DEFAULT_CHUNK = 1 << 16


class NotPartiallyHyperbolic(ValueError):
    pass


@dataclass(frozen=True)
class CatMap:
    """Hyperbolic element ((a, b), (c, d)) of SL(2, Z) acting on the 2-torus."""

    a: int = 2
    b: int = 1
    c: int = 1
    d: int = 1

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self.entries} is not 1")
        if abs(self.a + self.d) <= 2:
            raise ValueError(f"{self.entries} is not hyperbolic (|trace| <= 2)")

    @property
    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def trace(self) -> int:
        return self.a + self.d

    def unstable_eigenvalue_mp(self) -> mpmath.mpf:
        t = abs(self.trace)
        with mpmath.workdps(_DPS):
            return (t + mpmath.sqrt(t * t - 4)) / 2

    @property
    def unstable_eigenvalue(self) -> float:
        """Modulus of the expanding eigenvalue."""
        return float(self.unstable_eigenvalue_mp())

    def unstable_direction(self) -> np.ndarray:
        lam = math.copysign(self.unstable_eigenvalue, self.trace)
        # (A - lam) v = 0
        v = np.array([self.b, lam - self.a]) if self.b else np.array([lam - self.d, self.c])
        return v / np.linalg.norm(v)

    def inverse(self) -> "CatMap":
        return CatMap(self.d, -self.b, -self.c, self.a)


class AngleSpec:
    """A rotation angle in (0, 1) with its 2**-64 rounding.

    ``tag`` is ``"golden"``, ``"sqrt:<p>"`` or ``"explicit"``. Explicit angles
    carry no irrationality guarantee; when given as a rational their exact
    value is kept in ``exact``.
    """

    __slots__ = ("tag", "value", "raw", "exact")

    def __init__(self, tag: str, value: mpmath.mpf, exact: Optional[Fraction] = None):
        with mpmath.workdps(_DPS):
            value = mpmath.mpf(value)
            if not 0 < value < 1:
                raise ValueError(f"angle must lie in (0, 1), got {value}")
            raw = int(mpmath.nint(value * SCALE)) & MASK
        self.tag = tag
        self.value = value
        self.raw = raw
        self.exact = exact

    @classmethod
    def golden(cls) -> "AngleSpec":
        with mpmath.workdps(_DPS):
            return cls("golden", (mpmath.sqrt(5) - 1) / 2)

    @classmethod
    def sqrt_prime(cls, p: int) -> "AngleSpec":
        if p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
            raise ValueError(f"{p} is not prime")
        with mpmath.workdps(_DPS):
            s = mpmath.sqrt(p)
            return cls(f"sqrt:{p}", s - mpmath.floor(s))

    @classmethod
    def explicit(cls, value) -> "AngleSpec":
        if isinstance(value, (int, Fraction, str)):
            exact = Fraction(value)
            with mpmath.workdps(_DPS):
                v = mpmath.mpf(exact.numerator) / exact.denominator
            return cls("explicit", v, exact)
        return cls("explicit", mpmath.mpf(value))

    @classmethod
    def parse(cls, text: str) -> "AngleSpec":
        """``golden``, ``sqrt:7`` or a rational/decimal literal such as ``1/4``."""
        text = str(text).strip()
        if text == "golden":
            return cls.golden()
        if text.startswith("sqrt:"):
            return cls.sqrt_prime(int(text[5:]))
        return cls.explicit(text)

    @property
    def irrational(self) -> bool:
        return self.tag != "explicit"

    @property
    def rounded(self) -> TorusCoord:
        return TorusCoord(self.raw)

    def __float__(self) -> float:
        return float(self.value)

    def label(self) -> str:
        if self.tag == "explicit":
            return str(self.exact) if self.exact is not None else mpmath.nstr(self.value, 17)
        return self.tag

    def __eq__(self, other):
        return isinstance(other, AngleSpec) and (self.tag, self.raw, self.exact) == (
            other.tag, other.raw, other.exact)

    def __hash__(self):
        return hash((self.tag, self.raw))

    def __repr__(self) -> str:
        return f"AngleSpec({self.label()!r})"


class FixedPoint(NamedTuple):
    position: float
    kind: str
    derivative: float


@dataclass(frozen=True)
class MorseSmaleMap:
    """h(z) = z + eps/(2 pi ell) sin(2 pi ell (z - phase)) mod 1.

    Fixed points sit at ``phase + k/(2 ell)``: sources for even ``k``, sinks
    for odd ``k``. Sink ``i`` is ``phase + (2i + 1)/(2 ell)`` and attracts the
    open interval ``(phase + i/ell, phase + (i + 1)/ell)``.
    """

    ell: int = 1
    epsilon: float = 0.5
    phase: float = 0.0

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError("ell must be a positive integer")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0.0 <= self.phase < 1.0:
            raise ValueError("phase must lie in [0, 1)")

    @property
    def params(self) -> tuple[int, float, float]:
        return (int(self.ell), float(self.epsilon), float(self.phase))

    def __call__(self, z: float) -> float:
        return ms_apply(self, z)

    def derivative(self, z):
        return 1.0 + self.epsilon * np.cos(TWO_PI * self.ell * (np.asarray(z) - self.phase))

    def sink(self, i: int) -> float:
        return (self.phase + (2 * i + 1) / (2 * self.ell)) % 1.0

    def sinks(self) -> list[float]:
        return [self.sink(i) for i in range(self.ell)]

    def sources(self) -> list[float]:
        return [(self.phase + i / self.ell) % 1.0 for i in range(self.ell)]

    def basin_index(self, z) -> np.ndarray:
        """Index of the sink whose source-to-source interval contains ``z``."""
        t = np.mod(np.asarray(z, dtype=np.float64) - self.phase, 1.0)
        return np.floor(t * self.ell).astype(np.int64) % self.ell


@dataclass(frozen=True)
class ProductSystem:
    """f = A x R_alpha1 x ... x R_alphar, or g = f x h when ``center`` is set."""

    cat: CatMap = field(default_factory=CatMap)
    rotations: tuple = field(default_factory=lambda: (AngleSpec.golden(),))
    center: Optional[MorseSmaleMap] = None

    def __post_init__(self):
        object.__setattr__(self, "rotations", tuple(self.rotations))
        if not self.rotations:
            raise ValueError("at least one rotation factor is required")
        partial_hyperbolicity_certificate(self)

    @classmethod
    def default_f(cls, alpha: Optional[AngleSpec] = None) -> "ProductSystem":
        return cls(CatMap(), (alpha or AngleSpec.golden(),))

    @classmethod
    def default_g(cls, ell: int = 1, epsilon: float = 0.5, phase: float = 0.0,
                  alpha: Optional[AngleSpec] = None) -> "ProductSystem":
        return cls(CatMap(), (alpha or AngleSpec.golden(),), MorseSmaleMap(ell, epsilon, phase))

    @property
    def r(self) -> int:
        return len(self.rotations)

    @property
    def has_center(self) -> bool:
        return self.center is not None

    @property
    def alpha_raw(self) -> np.ndarray:
        return np.array([a.raw for a in self.rotations], dtype=np.uint64)

    def without_center(self) -> "ProductSystem":
        return ProductSystem(self.cat, self.rotations)

    def torus_inverse(self) -> "ProductSystem":
        """Inverse of the torus and rotation factors (center dropped)."""
        inv = []
        for a in self.rotations:
            b = AngleSpec.__new__(AngleSpec)
            b.tag, b.value, b.exact = a.tag, 1 - a.value, None
            b.raw = (-a.raw) & MASK
            inv.append(b)
        return ProductSystem(self.cat.inverse(), tuple(inv))


@dataclass(frozen=True)
class SystemPoint:
    x: TorusCoord
    y: TorusCoord
    w: tuple = ()
    z: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))
        if self.z is not None and not 0.0 <= self.z < 1.0:
            raise ValueError(f"center coordinate {self.z} outside [0, 1)")

    @classmethod
    def of(cls, x, y, w=(), z=None) -> "SystemPoint":
        """Build from real values (floats, Fractions or rational strings)."""
        return cls(TorusCoord.of(x), TorusCoord.of(y), tuple(TorusCoord.of(v) for v in w),
                   None if z is None else float(z) % 1.0)

    @classmethod
    def from_raw(cls, torus: Sequence[int], z: Optional[float] = None) -> "SystemPoint":
        return cls(TorusCoord(int(torus[0])), TorusCoord(int(torus[1])),
                   tuple(TorusCoord(int(v)) for v in torus[2:]),
                   None if z is None or (isinstance(z, float) and math.isnan(z)) else float(z))

    def torus_raw(self) -> np.ndarray:
        return np.array([self.x.raw, self.y.raw] + [v.raw for v in self.w], dtype=np.uint64)

    def with_z(self, z: float) -> "SystemPoint":
        return SystemPoint(self.x, self.y, self.w, z)

    def as_floats(self) -> tuple:
        out = (float(self.x), float(self.y)) + tuple(float(v) for v in self.w)
        return out if self.z is None else out + (self.z,)


@dataclass(frozen=True)
class PartialHyperbolicityCertificate:
    lambda_u: float
    sup_center: float
    C: float
    lam: float
    unstable_direction: tuple


def cat_apply(cat: CatMap, p: tuple) -> tuple:
    x, y = p
    return (TorusCoord((cat.a * x.raw + cat.b * y.raw) & MASK),
            TorusCoord((cat.c * x.raw + cat.d * y.raw) & MASK))


def rotation_apply(alpha: AngleSpec, w: TorusCoord) -> TorusCoord:
    return TorusCoord((w.raw + alpha.raw) & MASK)


def ms_apply(h: MorseSmaleMap, z: float) -> float:
    ell, eps, phase = h.params
    return kernels._pykernels.ms_step(float(z), eps / (TWO_PI * ell), TWO_PI * ell, phase)


def ms_fixed_points(h: MorseSmaleMap) -> list[FixedPoint]:
    pts = []
    for k in range(2 * h.ell):
        pos = (h.phase + k / (2 * h.ell)) % 1.0
        if k % 2:
            pts.append(FixedPoint(pos, "sink", 1.0 - h.epsilon))
        else:
            pts.append(FixedPoint(pos, "source", 1.0 + h.epsilon))
    return sorted(pts)


def _check_point(s: ProductSystem, p: SystemPoint):
    if len(p.w) != s.r:
        raise ValueError(f"point has {len(p.w)} rotation coordinates, system has {s.r}")
    if s.has_center != (p.z is not None):
        raise ValueError("center coordinate must be present exactly when the system has a center map")


def system_step(s: ProductSystem, p: SystemPoint) -> SystemPoint:
    _check_point(s, p)
    x, y = cat_apply(s.cat, (p.x, p.y))
    w = tuple(rotation_apply(a, v) for a, v in zip(s.rotations, p.w))
    z = ms_apply(s.center, p.z) if s.has_center else None
    return SystemPoint(x, y, w, z)


def orbit_chunks(s: ProductSystem, p0: SystemPoint, n: int, stride: int = 1,
                 chunk: int = DEFAULT_CHUNK) -> Iterator[tuple]:
    """Yield ``(T, Z)`` array blocks covering ``n`` samples of the orbit.

    ``T`` is uint64 ``(m, 2 + r)`` with raw torus/rotation coordinates and
    ``Z`` the float center coordinates (``None`` for f). Block boundaries only
    depend on ``chunk``.
    """
    if n < 1 or stride < 1:
        raise ValueError("n and stride must be >= 1")
    _check_point(s, p0)
    center = s.center.params if s.has_center else None
    torus = p0.torus_raw()
    z = p0.z if p0.z is not None else float("nan")
    done = 0
    while done < n:
        m = min(chunk, n - done)
        T, Z, torus, z = kernels.orbit_chunk(s.cat.entries, s.alpha_raw, center, torus, z, m, stride)
        yield T, Z
        done += m


def system_orbit(s: ProductSystem, p0: SystemPoint, n: int, stride: int = 1) -> Iterator[SystemPoint]:
    """Stream p0, s^stride(p0), ... (``n`` points)."""
    for T, Z in orbit_chunks(s, p0, n, stride):
        for i in range(T.shape[0]):
            yield SystemPoint.from_raw(T[i].tolist(), None if Z is None else float(Z[i]))


def analytic_lyapunov_spectrum(s: ProductSystem, sink_index: Optional[int] = None) -> list[float]:
    """Exponents of f, or of g on the slice over sink ``sink_index``, in decreasing order."""
    lu = float(mpmath.log(s.cat.unstable_eigenvalue_mp()))
    spec = [lu, -lu] + [0.0] * s.r
    if s.has_center:
        idx = 0 if sink_index is None else sink_index
        if not 0 <= idx < s.center.ell:
            raise IndexError(f"sink index {idx} out of range for ell={s.center.ell}")
        spec.append(math.log1p(-s.center.epsilon))
    return sorted(spec, reverse=True)


def partial_hyperbolicity_certificate(s: ProductSystem) -> PartialHyperbolicityCertificate:
    """Constants of the dominated splitting E^u + F in the Euclidean product metric."""
    lu = s.cat.unstable_eigenvalue
    sup_center = 1.0 + s.center.epsilon if s.has_center else 1.0
    lam = sup_center / lu
    if lam >= 1.0:
        raise NotPartiallyHyperbolic(f"domination ratio {lam} >= 1")
    return PartialHyperbolicityCertificate(lu, sup_center, 1.0, lam,
                                           tuple(s.cat.unstable_direction()))
