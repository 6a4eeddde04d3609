"""Character-index dynamics and the finite certificates behind ergodicity of f.

Composing the character exp(2 pi i (m x + n y + k.w)) with f multiplies it by
exp(2 pi i <alpha, k>) and moves its torus index by the transpose of the cat
matrix. Fourier coefficients of an f-invariant function therefore have
constant modulus along index orbits; the certificates below check the two
facts that force those coefficients to vanish.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from .core import AngleSpec, CatMap, ProductSystem

_DPS = 50
INDEX_LIMIT = 1 << 127


@dataclass(frozen=True, order=True)
class FrequencyIndex:
    """Torus frequencies ``m, n``, rotation frequencies ``k`` and center frequency ``j``."""

    m: int
    n: int
    k: tuple = ()
    j: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))

    def is_zero(self) -> bool:
        return self.m == 0 and self.n == 0 and not any(self.k) and self.j == 0

    def torus_vector(self) -> list[int]:
        return [self.m, self.n, *self.k]

    def norm(self) -> float:
        return float(sum(v * v for v in self.torus_vector() + [self.j])) ** 0.5

    def label(self) -> str:
        return ",".join(str(v) for v in self.torus_vector() + [self.j])

    @classmethod
    def parse(cls, text: str, r: int = 1) -> "FrequencyIndex":
        """``"m,n,k1,...,kr[,j]"``."""
        vals = [int(v) for v in str(text).replace(" ", "").split(",")]
        if len(vals) not in (2 + r, 3 + r):
            raise ValueError(f"frequency {text!r} needs {2 + r} or {3 + r} entries")
        j = vals[2 + r] if len(vals) == 3 + r else 0
        return cls(vals[0], vals[1], tuple(vals[2:2 + r]), j)


@dataclass(frozen=True)
class CoefficientRelation:
    """a[index_step(m, n), k] = phase * a[m, n, k] for an invariant function."""

    cat: CatMap
    angles: tuple
    k: tuple

    @property
    def phase(self) -> complex:
        t = rotation_phase(self.angles, self.k)
        with mpmath.workdps(_DPS):
            return complex(mpmath.expjpi(2 * t))

    def transport(self, m: int, n: int, coeff: complex, steps: int = 1) -> tuple:
        """Move a coefficient ``steps`` times along its index orbit."""
        for _ in range(steps):
            m, n = index_step(m, n, self.cat)
            coeff = coeff * self.phase
        return m, n, coeff


@dataclass
class EscapeCertificate:
    box_bound: int
    max_steps: int
    steps: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_escape_step(self) -> int:
        return max(self.steps.values(), default=0)


@dataclass
class ErgodicityReport:
    passed: bool
    escape_passed: bool
    max_escape_step: int
    n_indices: int
    escape_failures: list
    margin_floor: float
    min_margin: float
    argmin_k: tuple
    margins: dict
    box_bound: int
    k_bound: int

    def to_json(self) -> str:
        d = asdict(self)
        d["margins"] = {",".join(map(str, k)): v for k, v in self.margins.items()}
        return json.dumps(d, indent=2, sort_keys=True)


def index_step(m: int, n: int, cat: CatMap = CatMap()) -> tuple[int, int]:
    """Index of kappa_{m,n} composed with the cat map: (a m + c n, b m + d n)."""
    mm = cat.a * m + cat.c * n
    nn = cat.b * m + cat.d * n
    if abs(mm) >= INDEX_LIMIT or abs(nn) >= INDEX_LIMIT:
        raise OverflowError(f"index ({mm}, {nn}) exceeds 128-bit range")
    return mm, nn


def escape_certificate(cat: CatMap, M: int, step_budget: int = 64) -> EscapeCertificate:
    """Steps each nonzero (m, n) in [-M, M]^2 needs before leaving the box."""
    if M < 1 or step_budget < 1:
        raise ValueError("M and step_budget must be >= 1")
    cert = EscapeCertificate(M, step_budget)
    for m0 in range(-M, M + 1):
        for n0 in range(-M, M + 1):
            if m0 == 0 and n0 == 0:
                continue
            m, n = m0, n0
            for step in range(1, step_budget + 1):
                m, n = index_step(m, n, cat)
                if max(abs(m), abs(n)) > M:
                    cert.steps[(m0, n0)] = step
                    break
            else:
                cert.failures.append((m0, n0))
    return cert


def rotation_phase(angles: Sequence[AngleSpec], k: Sequence[int]):
    """<alpha, k> mod 1: a Fraction when every angle is an explicit rational, else an mpf."""
    if len(angles) != len(k):
        raise ValueError("one frequency per angle required")
    if all(a.exact is not None for a in angles):
        t = sum((a.exact * c for a, c in zip(angles, k)), Fraction(0))
        return t - (t.numerator // t.denominator)
    with mpmath.workdps(_DPS):
        t = mpmath.fsum(a.value * c for a, c in zip(angles, k))
        return t - mpmath.floor(t)


def rotation_margin(angles: Sequence[AngleSpec], k: Sequence[int]) -> float:
    """|exp(2 pi i <alpha, k>) - 1| = 2 |sin(pi <alpha, k>)|."""
    if not any(k):
        raise ValueError("k must be nonzero")
    t = rotation_phase(angles, k)
    if isinstance(t, Fraction) and t == 0:
        return 0.0
    with mpmath.workdps(_DPS):
        if isinstance(t, Fraction):
            t = mpmath.mpf(t.numerator) / t.denominator
        return float(2 * abs(mpmath.sinpi(t)))


def _nonzero_box(r: int, bound: int):
    for k in itertools.product(range(-bound, bound + 1), repeat=r):
        if any(k):
            yield k


def independence_falsifier(angles: Sequence[AngleSpec], coeff_bound: int,
                           tol: float = 1e-9) -> Optional[tuple]:
    """Search for integers C_1..C_r, C_0 with |sum C_i alpha_i - C_0| < tol.

    Candidates are scanned by increasing max|C_i|, then lexicographically, with
    the first nonzero coefficient positive. Returns ``(C_1, ..., C_r, C_0)`` or
    ``None``. A ``None`` is no proof of independence.
    """
    if coeff_bound < 1:
        raise ValueError("coeff_bound must be >= 1")
    r = len(angles)
    exact = all(a.exact is not None for a in angles)
    for size in range(1, coeff_bound + 1):
        for C in itertools.product(range(size, -size - 1, -1), repeat=r):
            if max(abs(c) for c in C) != size:
                continue
            first = next(c for c in C if c)
            if first < 0:
                continue
            if exact:
                s = sum((a.exact * c for a, c in zip(angles, C)), Fraction(0))
                c0 = round(s)
                if abs(s - c0) < tol:
                    return C + (int(c0),)
            else:
                with mpmath.workdps(_DPS):
                    s = mpmath.fsum(a.value * c for a, c in zip(angles, C))
                    c0 = int(mpmath.nint(s))
                    if abs(s - c0) < tol:
                        return C + (c0,)
    return None


def ergodicity_certificate(s: ProductSystem, M: int = 50, K: int = 8,
                           step_budget: int = 64, margin_floor: float = 1e-9) -> ErgodicityReport:
    """Both cases of the vanishing-coefficient argument, checked on finite boxes."""
    if s.has_center:
        raise ValueError("ergodicity certificate applies to systems without a center map")
    esc = escape_certificate(s.cat, M, step_budget)
    margins = {k: rotation_margin(s.rotations, k) for k in _nonzero_box(s.r, K)}
    argmin = min(margins, key=lambda k: (margins[k], sum(map(abs, k)), tuple(-v for v in k)))
    mn = margins[argmin]
    return ErgodicityReport(
        passed=esc.passed and mn > margin_floor,
        escape_passed=esc.passed,
        max_escape_step=esc.max_escape_step,
        n_indices=len(esc.steps) + len(esc.failures),
        escape_failures=esc.failures,
        margin_floor=margin_floor,
        min_margin=mn,
        argmin_k=argmin,
        margins=margins,
        box_bound=M,
        k_bound=K,
    )
