"""Orbit statistics: Birkhoff averages, Weyl sums, histograms, exponents, basins.

All sums run over fixed-size orbit chunks in a fixed order and are combined
with ``math.fsum``; parallel variants split work by frequency or by sample
block and merge keyed results, so the worker count never changes a number.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import kernels
from .core import (DEFAULT_CHUNK, MorseSmaleMap, ProductSystem, SystemPoint,
                   analytic_lyapunov_spectrum, orbit_chunks)
from .fixedpoint import INV_SCALE, MASK, SCALE, bin_index
from .lattice import FrequencyIndex
from .parallel import pmap, sample_rng, split

TWO_PI = 2.0 * math.pi
SURVEY_BLOCK = 4096


# ---------------------------------------------------------------- observables

def character_values(T: np.ndarray, Z: Optional[np.ndarray], freq: FrequencyIndex) -> np.ndarray:
    """exp(2 pi i <freq, point>) with the torus part of the phase formed exactly mod 1."""
    vec = freq.torus_vector()
    if len(vec) != T.shape[1]:
        raise ValueError(f"frequency {freq.label()} does not match a {T.shape[1] - 2}-rotation system")
    ph = np.zeros(T.shape[0], dtype=np.uint64)
    for col, c in enumerate(vec):
        if c:
            ph += np.uint64(c & MASK) * T[:, col]
    ang = ph.astype(np.float64) * INV_SCALE
    if freq.j:
        if Z is None:
            raise ValueError("center frequency given for a system without center map")
        ang = ang + freq.j * Z
    return np.exp(1j * TWO_PI * ang)


class Observable:
    """Bounded continuous function of a system point, evaluated on orbit chunks."""

    polynomial = True

    def values(self, T, Z) -> np.ndarray:
        raise NotImplementedError

    @property
    def sup_norm(self) -> float:
        raise NotImplementedError

    def lipschitz(self) -> float:
        raise NotImplementedError


class TrigPolynomial(Observable):
    def __init__(self, terms: Sequence[tuple]):
        self.terms = [(f, complex(c)) for f, c in terms]

    def values(self, T, Z):
        out = np.zeros(T.shape[0], dtype=np.complex128)
        for f, c in self.terms:
            if f.is_zero():
                out += c
            else:
                out += c * character_values(T, Z, f)
        return out

    @property
    def sup_norm(self):
        return math.fsum(abs(c) for _, c in self.terms)

    def lipschitz(self):
        return TWO_PI * math.fsum(abs(c) * f.norm() for f, c in self.terms)

    def __repr__(self):
        return "TrigPolynomial(" + " + ".join(f"{c}*e[{f.label()}]" for f, c in self.terms) + ")"


class Character(TrigPolynomial):
    def __init__(self, freq: FrequencyIndex):
        super().__init__([(freq, 1.0)])
        self.freq = freq

    def __repr__(self):
        return f"Character({self.freq.label()})"


def constant(c: complex, r: int = 1) -> TrigPolynomial:
    return TrigPolynomial([(FrequencyIndex(0, 0, (0,) * r), c)])


def _abs_sin_x(T, Z):
    return np.abs(np.sin(TWO_PI * T[:, 0].astype(np.float64) * INV_SCALE)).astype(np.complex128)


def _tent_z(T, Z):
    if Z is None:
        raise ValueError("tent_z needs a center coordinate")
    return (2.0 * np.minimum(Z, 1.0 - Z)).astype(np.complex128)


_BUILTINS = {"abs_sin_x": (_abs_sin_x, 1.0), "tent_z": (_tent_z, 1.0)}


class Builtin(Observable):
    """Named non-polynomial observable; its Lipschitz constant is estimated by sampling."""

    polynomial = False

    def __init__(self, name: str):
        if name not in _BUILTINS:
            raise ValueError(f"unknown built-in observable {name!r}; have {sorted(_BUILTINS)}")
        self.name = name
        self._fn, self._sup = _BUILTINS[name]

    def values(self, T, Z):
        return self._fn(T, Z)

    @property
    def sup_norm(self):
        return self._sup

    def lipschitz(self, r: int = 1, samples: int = 20000, h: float = 1e-6, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        d = 2 + r
        base = rng.random((samples, d + 1))
        step = rng.normal(size=(samples, d + 1))
        step *= h / np.linalg.norm(step, axis=1, keepdims=True)
        moved = np.mod(base + step, 1.0)

        def ev(P):
            T = (P[:, :d] * float(SCALE)).astype(np.uint64)
            return self._fn(T, P[:, d])

        return float(np.max(np.abs(ev(moved) - ev(base))) / h) * 1.05

    def __repr__(self):
        return f"Builtin({self.name!r})"


def parse_observable(text: str, r: int = 1) -> Observable:
    """A built-in name or a frequency ``"m,n,k..[,j]"`` for a single character."""
    if text in _BUILTINS:
        return Builtin(text)
    return Character(FrequencyIndex.parse(text, r))


# ------------------------------------------------------------ Birkhoff / Weyl

def birkhoff_average(s: ProductSystem, p0: SystemPoint, obs: Observable, N: int,
                     chunk: int = DEFAULT_CHUNK) -> complex:
    """(1/N) sum_{j<N} obs(s^j p0)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    re, im = [], []
    shift = None
    for T, Z in orbit_chunks(s, p0, N, 1, chunk):
        v = obs.values(T, Z)
        if shift is None:
            shift = complex(v[0])
        v = v - shift
        re.append(math.fsum(v.real))
        im.append(math.fsum(v.imag))
    return shift + complex(math.fsum(re), math.fsum(im)) / N


@dataclass
class WeylSumTable:
    freqs: list
    values: np.ndarray
    N: int

    @property
    def moduli(self) -> np.ndarray:
        # |cos + i sin| may round an ulp above 1
        return np.minimum(np.abs(self.values), 1.0)

    def rows(self):
        for f, v, m in zip(self.freqs, self.values, self.moduli):
            yield f, self.N, float(m), complex(v)

    def row(self, freq: FrequencyIndex):
        i = self.freqs.index(freq)
        return float(self.moduli[i])


def frequency_box(s: ProductSystem, box: Sequence[int]) -> list[FrequencyIndex]:
    """All frequencies with |m| <= box[0], |n| <= box[1], |k_i| <= box[2], |j| <= box[3]."""
    box = list(box) + [0] * (4 - len(box))
    bm, bn, bk, bj = (int(b) for b in box[:4])
    if min(bm, bn, bk, bj) < 0:
        raise ValueError("box bounds must be >= 0")
    if not s.has_center:
        bj = 0
    out = []
    for m, n in itertools.product(range(-bm, bm + 1), range(-bn, bn + 1)):
        for k in itertools.product(range(-bk, bk + 1), repeat=s.r):
            for j in range(-bj, bj + 1):
                out.append(FrequencyIndex(m, n, k, j))
    return out


def _weyl_task(task):
    s, p0, freqs, N, chunk = task
    F = np.array([f.torus_vector() for f in freqs], dtype=np.int64)
    J = np.array([f.j for f in freqs], dtype=np.int64)
    re = [[] for _ in freqs]
    im = [[] for _ in freqs]
    for T, Z in orbit_chunks(s, p0, N, 1, chunk):
        sums = kernels.weyl_chunk(T, Z, F, J)
        for i, v in enumerate(sums):
            re[i].append(v.real)
            im[i].append(v.imag)
    return [complex(math.fsum(a), math.fsum(b)) / N for a, b in zip(re, im)]


def weyl_sums(s: ProductSystem, p0: SystemPoint, box: Sequence[int], N: int,
              workers: int = 1, chunk: int = DEFAULT_CHUNK) -> WeylSumTable:
    if N < 1:
        raise ValueError("N must be >= 1")
    freqs = frequency_box(s, box)
    parts = split(len(freqs), max(1, workers))
    res = pmap(_weyl_task, [(s, p0, freqs[a:b], N, chunk) for a, b in parts], workers)
    values = np.array([v for part in res for v in part], dtype=np.complex128)
    return WeylSumTable(freqs, values, N)


def rotation_weyl_closed_form(s: ProductSystem, k: Sequence[int], N: int) -> float:
    """|sin(pi N t)| / (N |sin(pi t)|) with t = <k, alpha_rounded> mod 1, exactly."""
    raw = sum(int(c) * a.raw for c, a in zip(k, s.rotations)) & MASK
    if raw == 0:
        return 1.0
    with mpmath.workdps(40):
        t = mpmath.mpf(raw) / SCALE
        tN = mpmath.mpf((N * raw) & MASK) / SCALE
        return float(abs(mpmath.sinpi(tN)) / (N * abs(mpmath.sinpi(t))))


# -------------------------------------------------------- empirical measures

@dataclass
class EmpiricalMeasure:
    dims: tuple
    counts: np.ndarray
    total: int


def _bins_tuple(s: ProductSystem, bins) -> tuple:
    d = 2 + s.r
    dims = (int(bins),) * d if np.isscalar(bins) else tuple(int(b) for b in bins)
    if len(dims) != d or min(dims) < 2:
        raise ValueError(f"need {d} bin counts, each >= 2")
    return dims


def histogram_counts(T: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    flat = np.zeros(T.shape[0], dtype=np.int64)
    for col, b in enumerate(dims):
        flat = flat * b + bin_index(T[:, col], b)
    return np.bincount(flat, minlength=int(np.prod(dims)))


def empirical_measure(s: ProductSystem, p0: SystemPoint, bins, N: int,
                      chunk: int = DEFAULT_CHUNK) -> EmpiricalMeasure:
    """Histogram of the equidistributing coordinates (x, y, w) along the orbit."""
    dims = _bins_tuple(s, bins)
    counts = np.zeros(int(np.prod(dims)), dtype=np.int64)
    for T, _ in orbit_chunks(s, p0, N, 1, chunk):
        counts += histogram_counts(T, dims)
    return EmpiricalMeasure(dims, counts.reshape(dims), N)


def uniformity_deviation(e: EmpiricalMeasure) -> float:
    """max over bins of |count/N - 1/#bins|."""
    u = Fraction(1, e.counts.size)
    return float(max(abs(Fraction(int(c), e.total) - u) for c in (e.counts.min(), e.counts.max())))


# ------------------------------------------------------------------ Lyapunov

@dataclass
class LyapunovEstimate:
    cat: tuple
    rotations: tuple
    center: Optional[float]
    N: int


def _center_log_derivative(h: MorseSmaleMap, Z: np.ndarray) -> np.ndarray:
    return np.log1p(h.epsilon * np.cos(TWO_PI * h.ell * (Z - h.phase)))


def lyapunov_estimate(s: ProductSystem, p0: SystemPoint, N: int,
                      chunk: int = DEFAULT_CHUNK) -> LyapunovEstimate:
    if N < 1:
        raise ValueError("N must be >= 1")
    spec = analytic_lyapunov_spectrum(s.without_center())
    cat = (spec[0], spec[-1])
    rot = (0.0,) * s.r
    if not s.has_center:
        return LyapunovEstimate(cat, rot, None, N)
    return LyapunovEstimate(cat, rot, center_exponent_series(s, p0, [N], chunk)[0], N)


def center_exponent_series(s: ProductSystem, p0: SystemPoint, checkpoints: Sequence[int],
                           chunk: int = DEFAULT_CHUNK) -> list[float]:
    """Time averages of log h'(z_j) over the first n samples, for each checkpoint n."""
    if not s.has_center:
        raise ValueError("system has no center map")
    cps = sorted(set(int(c) for c in checkpoints))
    if cps[0] < 1:
        raise ValueError("checkpoints must be >= 1")
    partial_sums: list[float] = []
    out = {}
    done = 0
    for T, Z in orbit_chunks(s, p0, cps[-1], 1, chunk):
        v = _center_log_derivative(s.center, Z)
        start = 0
        for c in cps:
            if done < c <= done + len(v):
                out[c] = math.fsum(partial_sums + [math.fsum(v[start:c - done])]) / c
                partial_sums.append(math.fsum(v[start:c - done]))
                start = c - done
        partial_sums.append(math.fsum(v[start:]))
        done += len(v)
    return [out[int(c)] for c in checkpoints]


# ------------------------------------------------------------------- basins

def classify_centers(h: MorseSmaleMap, z0, max_iter: int = 10**5, radius: float = 1e-9,
                     source_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Sink labels (-1 when unresolved) and iterations used, for an array of z0."""
    ell, eps, phase = h.params
    return kernels.classify_z(np.asarray(z0, dtype=np.float64), ell, eps, phase,
                              int(max_iter), float(radius), float(source_tol))


def classify_basin(s: ProductSystem, p0: SystemPoint, max_iter: int = 10**5,
                   radius: float = 1e-9, source_tol: float = 1e-9) -> Optional[int]:
    """Index of the sink attracting p0, or ``None`` if unresolved.

    Only the center coordinate is iterated: g is a product, so the other
    coordinates cannot affect where z goes.
    """
    if not s.has_center:
        raise ValueError("basin classification needs a center map")
    labels, _ = classify_centers(s.center, [p0.z], max_iter, radius, source_tol)
    return None if labels[0] < 0 else int(labels[0])


@dataclass(frozen=True)
class RandomSampler:
    """Uniform points; block b of the stream comes from Philox keyed by (seed, b)."""

    seed: int

    def block(self, s: ProductSystem, b: int, size: int, n_total: int):
        rng = sample_rng(self.seed, b)
        z = rng.random(size)
        T = rng.integers(0, SCALE, size=(size, 2 + s.r), dtype=np.uint64)
        return T, z


@dataclass(frozen=True)
class GridSampler:
    """z0 = i / n_total for sample i; torus coordinates zero."""

    def block(self, s: ProductSystem, b: int, size: int, n_total: int):
        i = np.arange(b * SURVEY_BLOCK, b * SURVEY_BLOCK + size)
        return np.zeros((size, 2 + s.r), dtype=np.uint64), i / n_total


@dataclass
class BasinReport:
    counts: list
    unresolved: int
    total: int
    resolved_agree: int
    sinks: list = field(default_factory=list)

    @property
    def fractions(self) -> list[float]:
        return [c / self.total for c in self.counts]

    @property
    def half_widths(self) -> list[float]:
        return [3.0 * math.sqrt(p * (1.0 - p) / self.total) for p in self.fractions]

    @property
    def resolved(self) -> int:
        return self.total - self.unresolved

    @property
    def sinks_found(self) -> int:
        return sum(1 for c in self.counts if c > 0)


def _survey_block(task):
    s, sampler, b, size, n_total, max_iter, radius, source_tol = task
    _, z0 = sampler.block(s, b, size, n_total)
    labels, _ = classify_centers(s.center, z0, max_iter, radius, source_tol)
    ok = labels >= 0
    agree = int(np.count_nonzero(labels[ok] == s.center.basin_index(z0[ok])))
    counts = np.bincount(labels[ok], minlength=s.center.ell)
    return counts, int(np.count_nonzero(~ok)), agree


def basin_survey(s: ProductSystem, sampler, n_samples: int, max_iter: int = 10**5,
                 radius: float = 1e-9, source_tol: float = 1e-9,
                 workers: int = 1) -> BasinReport:
    """Classify ``n_samples`` initial points and compare with the source-interval rule."""
    if not s.has_center:
        raise ValueError("basin survey needs a center map")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    nblocks = -(-n_samples // SURVEY_BLOCK)
    tasks = [(s, sampler, b, min(SURVEY_BLOCK, n_samples - b * SURVEY_BLOCK), n_samples,
              max_iter, radius, source_tol) for b in range(nblocks)]
    counts = np.zeros(s.center.ell, dtype=np.int64)
    unresolved = agree = 0
    for c, u, a in pmap(_survey_block, tasks, workers):
        counts += c
        unresolved += u
        agree += a
    return BasinReport([int(c) for c in counts], unresolved, n_samples, agree, s.center.sinks())


# ---------------------------------------------------------------- sandwich

@dataclass
class SandwichRow:
    n: int
    D: float
    bound: float
    holds: bool


@dataclass
class SandwichReport:
    sink_index: int
    sink: float
    delta: float
    N_delta: int
    P: float
    eps: float
    rows: list
    lipschitz_estimated: bool

    @property
    def holds(self) -> bool:
        return all(r.holds for r in self.rows)

    @property
    def violations(self) -> list[int]:
        return [r.n for r in self.rows if not r.holds]


def default_ladder(N: int) -> list[int]:
    out = [10 ** e for e in range(3, 19) if 10 ** e <= N]
    return out or [N]


def sandwich_check(s: ProductSystem, obs: Observable, p0: SystemPoint, eps: float, N: int,
                   ladder: Optional[Sequence[int]] = None, chunk: int = DEFAULT_CHUNK) -> SandwichReport:
    """Compare Birkhoff sums from p0 and from p0 moved onto its sink slice.

    D(n) = |B_n(p0) - B_n(p0')| must stay below eps + 2 N_delta P / n, where
    N_delta is the first time after which the two orbits stay within the
    continuity radius delta(eps) of ``obs`` and P is its sup norm.
    """
    if not s.has_center:
        raise ValueError("sandwich check needs a center map")
    sink_idx = classify_basin(s, p0)
    if sink_idx is None:
        raise ValueError("initial point is not resolved to a sink")
    u = s.center.sink(sink_idx)
    q0 = p0.with_z(u)
    ladder = sorted(set(ladder or default_ladder(N)))
    if ladder[-1] > N or ladder[0] < 1:
        raise ValueError("ladder points must lie in [1, N]")
    lip = obs.lipschitz() if obs.polynomial else obs.lipschitz(s.r)
    P = obs.sup_norm
    delta = math.inf if lip == 0 else eps / lip

    partial_re: list[float] = []
    partial_im: list[float] = []
    D = {}
    last_far = -1
    done = 0
    for (T, Z), (_, Zq) in zip(orbit_chunks(s, p0, N, 1, chunk), orbit_chunks(s, q0, N, 1, chunk)):
        dist = np.abs(Z - Zq)
        dist = np.minimum(dist, 1.0 - dist)
        far = np.nonzero(dist >= delta)[0]
        if far.size:
            last_far = done + int(far[-1])
        diff = obs.values(T, Z) - obs.values(T, Zq)
        start = 0
        for n in ladder:
            if done < n <= done + len(diff):
                partial_re.append(math.fsum(diff.real[start:n - done]))
                partial_im.append(math.fsum(diff.imag[start:n - done]))
                start = n - done
                D[n] = abs(complex(math.fsum(partial_re), math.fsum(partial_im))) / n
        partial_re.append(math.fsum(diff.real[start:]))
        partial_im.append(math.fsum(diff.imag[start:]))
        done += len(diff)
    n_delta = last_far + 1
    rows = []
    for n in ladder:
        bound = eps + 2.0 * n_delta * P / n
        rows.append(SandwichRow(n, D[n], bound, D[n] <= bound))
    return SandwichReport(sink_idx, u, delta, n_delta, P, eps, rows, not obs.polynomial)


# ------------------------------------------------------------- transitivity

def boxes_per_axis(eps: float) -> int:
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return math.ceil(round(1.0 / eps, 9))


def transitivity_probe(s: ProductSystem, p0: SystemPoint, eps: float, N: int,
                       chunk: int = DEFAULT_CHUNK) -> float:
    """Fraction of the eps-boxes of T^2 x T^r visited by the first N orbit points."""
    if s.has_center:
        raise ValueError("transitivity probe applies to systems without a center map")
    K = boxes_per_axis(eps)
    dims = (K,) * (2 + s.r)
    visited = np.zeros(int(np.prod(dims)), dtype=bool)
    for T, _ in orbit_chunks(s, p0, N, 1, chunk):
        visited |= histogram_counts(T, dims) > 0
    return float(np.count_nonzero(visited)) / visited.size
