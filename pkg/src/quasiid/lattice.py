"""Quasi-infinite divisibility of lattice distributions.

:func:`analyze_finite` factors the mass polynomial and expands the logarithm
of every linear factor. :func:`analyze_z` instead reads the quasi-Levy
measure off the Fourier coefficients of the continuous logarithm of the
characteristic function. When that measure lives on the positive integers,
:func:`katti_extract` gives a third, recursive route.

Every triplet is returned in drift form, with Gaussian variance 0.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np
import numpy.polynomial.polynomial as P

from .errors import NotQidResultError, PhaseUnwrapError, QidError, ZeroCharacteristicFunctionError
from .signed_measure import INTEGERS, Lattice, SignedAtomicMeasure
from .triplet import CharacteristicTriplet, RepresentationKind, affine_transform, psi_eval

MASS_TOL = 1e-12
DEFAULT_TRUNC_TOL = 1e-13
DEFAULT_CIRCLE_TOL = 1e-8
# |f| on the unit circle below this multiple of the rounding level counts as an exact zero
ZERO_EVAL_FACTOR = 64.0
# radii at which nearby roots close to the unit circle are tested for being one multiple root
CLUSTER_RADII = (0.2, 5e-2, 1e-2, 1e-3, 1e-4)
MAX_CLUSTER = 64
MULTIPLE_ROOT_RTOL = 1e-10
CONJUGATE_TOL = 1e-8
IMAG_TOL_ROOTS = 1e-9
IMAG_TOL_FFT = 1e-8
MIN_CHARFN = 1e-8
MAX_GRID = 2 ** 18
AUTO_ROOT_MAX_WIDTH = 512


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Probability masses on ``offset + spacing * (first_index + j)``.

    Leading and trailing zero masses are trimmed on construction.
    ``truncated_mass`` records how much mass was cut away by the factory
    functions for infinite-support laws (before renormalising).
    """

    masses: np.ndarray
    first_index: int = 0
    offset: float = 0.0
    spacing: float = 1.0
    truncated_mass: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).ravel()
        if m.size == 0:
            raise ValueError("a distribution needs at least one mass")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("masses must be finite and nonnegative")
        total = math.fsum(m)
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {total!r}, not 1")
        nz = np.flatnonzero(m)
        m = m[nz[0]: nz[-1] + 1].copy()
        m.setflags(write=False)
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "first_index", int(self.first_index) + int(nz[0]))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "spacing", float(self.spacing))

    # -- factories -------------------------------------------------------

    @classmethod
    def point(cls, k: int = 0) -> "LatticeDistribution":
        return cls(np.array([1.0]), k)

    @classmethod
    def bernoulli(cls, p: float) -> "LatticeDistribution":
        """``b(1, p)``: mass ``p`` at 1."""
        return cls(np.array([1.0 - p, p]))

    @classmethod
    def binomial(cls, n: int, p: float) -> "LatticeDistribution":
        k = np.arange(n + 1)
        logc = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in k])
        with np.errstate(divide="ignore"):
            m = np.exp(logc + k * np.log(p) + (n - k) * np.log1p(-p)) if 0 < p < 1 else None
        if m is None:
            return cls.point(n if p == 1 else 0)
        return cls(m / math.fsum(m))

    @classmethod
    def from_unnormalised(cls, masses, first_index: int = 0, tol: float = 1e-14, **kw) -> "LatticeDistribution":
        """Drop masses below ``tol`` at both ends and renormalise."""
        m = np.asarray(masses, dtype=float)
        big = np.flatnonzero(m >= tol)
        kept = m[big[0]: big[-1] + 1]
        total = math.fsum(m)
        cut = total - math.fsum(kept)
        return cls(kept / math.fsum(kept), first_index + int(big[0]), truncated_mass=max(cut, 0.0) / total, **kw)

    @classmethod
    def poisson(cls, lam: float, tol: float = 1e-14) -> "LatticeDistribution":
        n = int(lam + 20 * math.sqrt(lam) + 60)
        k = np.arange(n)
        m = np.exp(k * math.log(lam) - lam - np.array([math.lgamma(i + 1) for i in k])) if lam > 0 else np.eye(1, n)[0]
        return cls.from_unnormalised(m, 0, tol)

    @classmethod
    def geometric(cls, p: float, tol: float = 1e-14) -> "LatticeDistribution":
        """Masses ``p (1-p)^n`` on ``n = 0, 1, ...``."""
        q = 1.0 - p
        n = int(math.ceil(math.log(tol / p) / math.log(q))) + 2 if q > 0 else 1
        return cls.from_unnormalised(p * q ** np.arange(n), 0, tol)

    @classmethod
    def from_dict(cls, data: Mapping) -> "LatticeDistribution":
        return cls(
            np.asarray(data["masses"], dtype=float),
            int(data.get("first_index", 0)),
            float(data.get("offset", 0.0)),
            float(data.get("spacing", 1.0)),
        )

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "spacing": self.spacing,
            "first_index": self.first_index,
            "masses": self.masses.tolist(),
        }

    # -- queries ---------------------------------------------------------

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.offset, self.spacing)

    @property
    def degree(self) -> int:
        return self.masses.size - 1

    def indices(self) -> np.ndarray:
        return self.first_index + np.arange(self.masses.size)

    def locations(self) -> np.ndarray:
        return self.offset + self.spacing * self.indices()

    def mass_at_index(self, k: int) -> float:
        j = k - self.first_index
        return float(self.masses[j]) if 0 <= j < self.masses.size else 0.0

    def charfn(self, z):
        z_arr = np.asarray(z, dtype=float)
        out = np.exp(1j * np.multiply.outer(z_arr, self.locations())) @ self.masses
        return complex(out) if np.ndim(out) == 0 else out

    def mean(self) -> float:
        return float(self.locations() @ self.masses)

    def variance(self) -> float:
        x = self.locations() - self.mean()
        return float((x * x) @ self.masses)

    def to_measure(self) -> SignedAtomicMeasure:
        return SignedAtomicMeasure.from_indices(self.indices(), self.masses, self.lattice)

    def mix(self, other: "LatticeDistribution", p: float) -> "LatticeDistribution":
        """``p * self + (1 - p) * other`` on a shared lattice."""
        s = other.lattice.shift_to(self.lattice)
        if s is None:
            raise ValueError("distributions live on different lattices")
        lo = min(self.first_index, other.first_index + s)
        hi = max(self.first_index + self.degree, other.first_index + s + other.degree)
        m = np.zeros(hi - lo + 1)
        m[self.first_index - lo: self.first_index - lo + self.masses.size] += p * self.masses
        j = other.first_index + s - lo
        m[j: j + other.masses.size] += (1 - p) * other.masses
        return LatticeDistribution(m / math.fsum(m), lo, self.offset, self.spacing)

    def l1_distance(self, other: "LatticeDistribution") -> float:
        return (self.to_measure() - other.to_measure()).total_variation()

    def __repr__(self):
        body = ", ".join(f"{x:.6g}" for x in self.masses[:6]) + (", ..." if self.masses.size > 6 else "")
        return (f"LatticeDistribution([{body}], first_index={self.first_index}, "
                f"offset={self.offset:g}, spacing={self.spacing:g})")


@dataclass(frozen=True)
class AffineMap:
    """``x -> scale * y + shift`` taking the integer-lattice variable back."""

    scale: float = 1.0
    shift: float = 0.0

    def __call__(self, y):
        return self.scale * np.asarray(y, dtype=float) + self.shift

    @property
    def is_identity(self) -> bool:
        return self.scale == 1.0 and self.shift == 0.0

    def apply(self, t: CharacteristicTriplet) -> CharacteristicTriplet:
        if self.is_identity:
            return t
        return affine_transform(t, self.scale, self.shift)


def rescale(mu: LatticeDistribution) -> tuple[LatticeDistribution, AffineMap]:
    """Integer-lattice copy ``Y = (X - offset)/spacing`` and the map back to ``X``."""
    y = LatticeDistribution(mu.masses, mu.first_index)
    return y, AffineMap(mu.spacing, mu.offset)


class Verdict(str, Enum):
    QID = "QID"
    NOT_QID = "NotQID"
    UNDECIDED = "Undecided"


class RootLocation(str, Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    ON_CIRCLE = "on_circle"


@dataclass
class PolynomialRootSet:
    roots: np.ndarray
    classes: list
    delta: float
    min_circle_distance: float
    imag_residual: float = 0.0

    @property
    def n_inside(self) -> int:
        return sum(c is RootLocation.INSIDE for c in self.classes)

    def on_circle(self) -> np.ndarray:
        return np.array([r for r, c in zip(self.roots, self.classes) if c is RootLocation.ON_CIRCLE])

    def to_dict(self) -> dict:
        return {
            "kind": "roots",
            "roots": [[float(r.real), float(r.imag)] for r in self.roots],
            "classes": [c.value for c in self.classes],
            "delta": self.delta,
            "min_circle_distance": self.min_circle_distance,
            "imag_residual": self.imag_residual,
        }


@dataclass
class DistinguishedLog:
    grid_size: int
    samples: np.ndarray
    drift_k: int
    fourier_coeffs: dict
    truncation_bound: float
    max_imag_residual: float
    winding_residual: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.grid_size + 1) / self.grid_size

    def to_dict(self) -> dict:
        return {
            "kind": "distinguished_log",
            "grid_size": self.grid_size,
            "drift_k": self.drift_k,
            "n_coefficients": len(self.fourier_coeffs),
            "truncation_bound": self.truncation_bound,
            "max_imag_residual": self.max_imag_residual,
        }


@dataclass
class QidResult:
    verdict: Verdict
    triplet: CharacteristicTriplet | None = None
    diagnostics: PolynomialRootSet | DistinguishedLog | None = None
    tail_bound: float = 0.0
    reason: str = ""
    method: str = ""

    @property
    def is_qid(self) -> bool:
        return self.verdict is Verdict.QID

    @property
    def drift(self) -> float:
        self._require()
        return self.triplet.gamma

    @property
    def nu(self) -> SignedAtomicMeasure:
        self._require()
        return self.triplet.nu

    def _require(self):
        if self.verdict is not Verdict.QID:
            raise NotQidResultError(f"result is {self.verdict.value}: {self.reason}")

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "reason": self.reason,
            "method": self.method,
            "triplet": None if self.triplet is None else self.triplet.to_dict(),
            "tail_bound": self.tail_bound,
            "diagnostics": None if self.diagnostics is None else self.diagnostics.to_dict(),
        }


# -- polynomial roots --------------------------------------------------------


def _newton_ratio(coeffs: np.ndarray, w: complex) -> tuple[complex, float]:
    """``f(w)/f'(w)`` and ``log|f(w)|``, evaluated through the reversed
    polynomial when ``|w| > 1`` to avoid overflow."""
    n = coeffs.size - 1
    if abs(w) <= 1:
        f = P.polyval(w, coeffs)
        df = P.polyval(w, P.polyder(coeffs))
        return (f / df if df != 0 else 0j), (math.log(abs(f)) if f != 0 else -math.inf)
    u = 1.0 / w
    rev = coeffs[::-1]
    q = P.polyval(u, rev)
    dq = P.polyval(u, P.polyder(rev))
    denom = n * q - u * dq
    ratio = w * q / denom if denom != 0 else 0j
    logf = n * math.log(abs(w)) + (math.log(abs(q)) if q != 0 else -math.inf)
    return ratio, logf


def _aberth_sweep(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """One Aberth-Ehrlich update per root, kept only where it lowers ``|f|``."""
    out = roots.copy()
    for k in range(roots.size):
        ratio, logf = _newton_ratio(coeffs, roots[k])
        if ratio == 0 or logf == -math.inf:
            continue
        diffs = roots[k] - np.delete(roots, k)
        if np.any(diffs == 0):
            continue
        corr = ratio / (1.0 - ratio * np.sum(1.0 / diffs))
        cand = roots[k] - corr
        if _newton_ratio(coeffs, cand)[1] < logf:
            out[k] = cand
    return out


def _polish_multiple(coeffs: np.ndarray, center: complex, m: int) -> complex | None:
    """Newton on the (m-1)-th derivative from ``center``; returns the root only
    if all lower derivatives vanish there to rounding level."""
    d = P.polyder(coeffs, m - 1)
    dd = P.polyder(d)
    w = center
    for _ in range(50):
        dv = P.polyval(w, dd)
        if dv == 0:
            break
        step = P.polyval(w, d) / dv
        w -= step
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    if not np.isfinite(w):
        return None
    aw = abs(w)
    for j in range(m - 1):
        c = P.polyder(coeffs, j) if j else coeffs
        scale = P.polyval(aw, np.abs(c))
        if abs(P.polyval(w, c)) > MULTIPLE_ROOT_RTOL * scale:
            return None
    return complex(w)


def _components(points: np.ndarray, radius: float) -> list[np.ndarray]:
    """Single-linkage groups of ``points`` at distance below ``radius``."""
    parent = np.arange(points.size)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    ii, jj = np.nonzero(np.triu(np.abs(points[:, None] - points[None, :]) < radius, 1))
    for i, j in zip(ii, jj):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri
    roots = np.array([find(i) for i in range(points.size)])
    return [np.flatnonzero(roots == r) for r in np.unique(roots)]


def _refine_clusters(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Replace a cluster near the unit circle by one multiple root.

    A root of multiplicity m is split by rounding into m roots spread by
    about eps**(1/m). Clusters are searched from the widest radius down; a
    cluster is merged only when Newton on the (m-1)-th derivative (where the
    root is simple) lands on a point at which the lower derivatives vanish
    too. Roots of rejected clusters are retried at the next smaller radius.
    """
    out = roots.copy()
    free = np.ones(roots.size, dtype=bool)
    for radius in CLUSTER_RADII:
        idx = np.flatnonzero(free)
        if idx.size < 2:
            break
        for comp in _components(roots[idx], radius):
            group = idx[comp]
            m = group.size
            if m < 2 or m > MAX_CLUSTER:
                continue
            center = complex(np.mean(roots[group]))
            if abs(abs(center) - 1.0) >= radius:
                continue
            w = _polish_multiple(coeffs, center, m)
            if w is not None and abs(w - center) < radius:
                out[group] = w
                free[group] = False
    return out


def _symmetrize(roots: np.ndarray) -> tuple[np.ndarray, float]:
    """Force exact conjugate pairing; returns the new roots and the largest
    pairing mismatch (inf when pairing fails)."""
    out = roots.astype(complex).copy()
    scale = np.maximum(1.0, np.abs(out))
    real = np.abs(out.imag) <= CONJUGATE_TOL * scale
    out[real] = out[real].real
    upper = [i for i in range(out.size) if not real[i] and out[i].imag > 0]
    lower = [i for i in range(out.size) if not real[i] and out[i].imag < 0]
    if len(upper) != len(lower):
        return roots, math.inf
    worst = 0.0
    for i in upper:
        j = min(lower, key=lambda j: abs(out[j] - np.conj(out[i])))
        lower.remove(j)
        mismatch = abs(out[j] - np.conj(out[i]))
        worst = max(worst, mismatch / scale[i])
        avg = 0.5 * (out[i] + np.conj(out[j]))
        out[i], out[j] = avg, np.conj(avg)
    return out, worst


def polynomial_roots(coeffs) -> np.ndarray:
    """All roots of ``sum_j coeffs[j] w^j``.

    Companion-matrix eigenvalues, one Aberth sweep, multiple-root cluster
    refinement near ``|w| = 1`` and exact conjugate pairing.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.size < 2:
        return np.zeros(0, dtype=complex)
    roots = P.polyroots(c).astype(complex)
    roots = _aberth_sweep(c, roots)
    roots = _refine_clusters(c, roots)
    return roots


def classify_roots(coeffs, circle_tol: float = DEFAULT_CIRCLE_TOL) -> PolynomialRootSet:
    roots = polynomial_roots(coeffs)
    roots, mismatch = _symmetrize(roots)
    dist = np.abs(np.abs(roots) - 1.0)
    classes = [
        RootLocation.ON_CIRCLE if d <= circle_tol else (RootLocation.INSIDE if abs(r) < 1 else RootLocation.OUTSIDE)
        for r, d in zip(roots, dist)
    ]
    return PolynomialRootSet(roots, classes, circle_tol, float(dist.min()) if dist.size else math.inf, mismatch)


# -- series truncation -------------------------------------------------------


def _log_tail_l1(rho: float, m: int) -> float:
    """log of ``rho^(M+1) / ((M+1)(1-rho))`` which bounds ``sum_{k>M} rho^k/k``."""
    return (m + 1) * math.log(rho) - math.log(m + 1) - math.log1p(-rho)


def _log_tail_second(rho: float, m: int) -> float:
    """log of ``sum_{k>M} k rho^k``, the tail of the x^2-weighted series."""
    return (m + 1) * math.log(rho) + math.log((m + 1) - m * rho) - 2 * math.log1p(-rho)


def series_terms(rho: float, count: int, tol: float) -> int:
    """Smallest ``M`` with both ``count``-fold tails of the ``rho^k/k`` series below ``tol``."""
    if rho <= 0 or count == 0:
        return 0
    target = math.log(tol) - math.log(count)

    def ok(m):
        return max(_log_tail_l1(rho, m), _log_tail_second(rho, m)) < target

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > 1 << 40:
            return hi
    lo = hi // 2
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return hi


def geometric_log_tail(rho: float, m: int) -> float:
    """``rho^(M+1) / ((M+1)(1-rho))``."""
    if rho <= 0:
        return 0.0
    return math.exp(_log_tail_l1(rho, m))


# -- root-based analysis -----------------------------------------------------


def _exp_times(c: complex, ms: np.ndarray) -> np.ndarray:
    """``exp(c * m)`` without rounding ``c * m``: ``c`` is split into a 24-bit
    head (whose products with ``m < 2**29`` are exact) and a small remainder."""
    re_hi, im_hi = float(np.float32(c.real)), float(np.float32(c.imag))
    re_lo, im_lo = c.real - re_hi, c.imag - im_hi
    mag = np.exp(ms * re_hi) * np.exp(ms * re_lo)
    return mag * np.exp(1j * (ms * im_hi)) * np.exp(1j * (ms * im_lo))


def _complex_powers(x: complex, ms: np.ndarray) -> np.ndarray:
    # the phase m*arg(x) reaches 1e5 for near-circle roots; rounding it per term
    # would put independent errors of size m*eps on every atom
    return _exp_times(cmath.log(x), ms)


def _single_point(k: int, back: AffineMap, method: str, diag=None) -> QidResult:
    t = CharacteristicTriplet(0.0, SignedAtomicMeasure.zero(INTEGERS), float(k), RepresentationKind.DRIFT)
    return QidResult(Verdict.QID, back.apply(t), diag, 0.0, "", method)


def analyze_finite(
    mu: LatticeDistribution,
    trunc_tol: float = DEFAULT_TRUNC_TOL,
    circle_tol: float = DEFAULT_CIRCLE_TOL,
    max_terms: int = 1_000_000,
) -> QidResult:
    """Decide QID for a finitely supported lattice law by its polynomial roots.

    The law is QID iff the mass polynomial has no root on the unit circle.
    Otherwise roots inside the circle put atoms ``-sum xi^m / m`` on ``-m``
    and count towards the drift; roots outside put ``-sum xi^-m / m`` on ``m``.
    """
    y, back = rescale(mu)
    k0 = y.first_index
    a = y.masses
    if a.size == 1:
        return _single_point(k0, back, "root")
    rs = classify_roots(a, circle_tol)
    on = [i for i, c in enumerate(rs.classes) if c is RootLocation.ON_CIRCLE]
    if on:
        # an exact zero of the characteristic function is certified by evaluating
        # the polynomial at the projection of the root onto the circle
        level = ZERO_EVAL_FACTOR * np.finfo(float).eps * math.fsum(a)
        certified = [i for i in on if abs(P.polyval(rs.roots[i] / abs(rs.roots[i]), a)) <= level]
        if certified:
            z = rs.roots[certified[0]]
            return QidResult(Verdict.NOT_QID, None, rs, 0.0,
                             f"root on unit circle at {z.real:.12g}{z.imag:+.12g}j", "root")
        return QidResult(Verdict.UNDECIDED, None, rs, 0.0,
                         f"root within {circle_tol:g} of the unit circle", "root")
    if not rs.imag_residual <= IMAG_TOL_ROOTS:
        # unpaired roots would leave imaginary parts in the atoms
        return QidResult(Verdict.UNDECIDED, None, rs, 0.0,
                         f"roots pair into conjugates only to {rs.imag_residual:.3g}", "root")

    inside = rs.roots[np.array([c is RootLocation.INSIDE for c in rs.classes])]
    outside = rs.roots[np.array([c is RootLocation.OUTSIDE for c in rs.classes])]
    rho_in = float(np.max(np.abs(inside))) if inside.size else 0.0
    rho_out = float(np.max(1.0 / np.abs(outside))) if outside.size else 0.0
    m_in = series_terms(rho_in, inside.size, trunc_tol / 2)
    m_out = series_terms(rho_out, outside.size, trunc_tol / 2)
    if max(m_in, m_out) > max_terms:
        return QidResult(Verdict.UNDECIDED, None, rs, 0.0,
                         f"roots too close to the unit circle: {max(m_in, m_out)} series terms needed", "root")

    def power_sums(xs, count):
        # roots are exactly conjugate-paired here, so each pair contributes 2 Re(x^m)
        ms = np.arange(1, count + 1)
        acc = np.zeros(count)
        for x in xs:
            if x.imag == 0:
                acc += np.power(x.real, ms)
            elif x.imag > 0:
                acc += 2.0 * _complex_powers(complex(x), ms).real
        return -acc / ms

    w_neg = power_sums(inside, m_in)
    w_pos = power_sums(1.0 / outside, m_out)
    idx = np.concatenate((-np.arange(1, m_in + 1), np.arange(1, m_out + 1)))
    nu = SignedAtomicMeasure.from_indices(idx, np.concatenate((w_neg, w_pos)), INTEGERS)
    tail = inside.size * geometric_log_tail(rho_in, m_in) + outside.size * geometric_log_tail(rho_out, m_out)
    t = CharacteristicTriplet(0.0, nu, float(k0 + inside.size), RepresentationKind.DRIFT)
    return QidResult(Verdict.QID, back.apply(t), rs, tail, "", "root")


# -- distinguished logarithm -------------------------------------------------


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _charfn_grid(masses: np.ndarray, n: int) -> np.ndarray:
    """``sum_j masses[j] e^{i j z}`` at ``z = 2 pi l / n``, ``l = 0..n``."""
    folded = np.zeros(n)
    np.add.at(folded, np.arange(masses.size) % n, masses)
    vals = np.fft.ifft(folded) * n
    return np.append(vals, vals[0])


def distinguished_log(mu: LatticeDistribution, grid_size: int | None = None,
                      coeff_tol: float = 1e-15) -> DistinguishedLog:
    """Continuous logarithm ``g`` of the characteristic function of a law on Z.

    ``g`` is sampled on ``z_l = 2 pi l / N`` by unwrapping the phase along
    the grid; ``N`` doubles (up to 2**18) while a phase step exceeds pi/2 or
    the Fourier coefficients near ``N/2`` are not negligible.
    """
    if mu.offset != 0.0 or mu.spacing != 1.0:
        raise QidError("distinguished_log expects a distribution on Z; rescale it first")
    a = mu.masses
    k0 = mu.first_index
    n = _next_pow2(max(64, 8 * a.size, grid_size or 0))
    while True:
        vals = _charfn_grid(a, n)
        low = float(np.min(np.abs(vals)))
        if low <= MIN_CHARFN:
            raise ZeroCharacteristicFunctionError(
                f"possible zero of characteristic function (|phi| = {low:.3g} on the grid)")
        steps = np.angle(vals[1:] / vals[:-1])
        big = float(np.max(np.abs(steps)))
        if big > np.pi / 2 and n < MAX_GRID:
            n *= 2
            continue
        if big >= np.pi:
            raise PhaseUnwrapError(f"phase step {big:.3g} exceeds pi on the finest grid")
        theta = np.concatenate(([0.0], np.cumsum(steps)))
        wind = theta[-1] / (2 * np.pi)
        k_rel = int(round(wind))
        z = 2 * np.pi * np.arange(n + 1) / n
        # normalising by phi(0) pins g(0) = 0 despite rounding in the total mass
        g_rel = np.log(np.abs(vals) / abs(vals[0])) + 1j * theta
        g_tilde = g_rel[:-1] - 1j * k_rel * z[:-1]
        b = np.fft.fft(g_tilde) / n
        band = np.abs(b[n // 4: 3 * n // 4 + 1])
        if band.max() > coeff_tol and n < MAX_GRID:
            n *= 2
            continue
        break
    freqs = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    imag = float(np.max(np.abs(b.imag[freqs != 0])))
    coeffs = {int(f): float(v) for f, v in zip(freqs, b.real) if f != 0}
    samples = g_rel + 1j * k0 * z
    return DistinguishedLog(n, samples, k_rel + k0, coeffs, float(band.max()) * n / 2, imag,
                            abs(wind - k_rel))


def analyze_z(mu: LatticeDistribution, trunc_tol: float = DEFAULT_TRUNC_TOL,
              grid_size: int | None = None) -> QidResult:
    """Quasi-Levy measure of a lattice law from the Fourier coefficients of
    its distinguished logarithm (drift = winding number)."""
    y, back = rescale(mu)
    if y.masses.size == 1:
        return _single_point(y.first_index, back, "fft")
    try:
        dl = distinguished_log(y, grid_size)
    except PhaseUnwrapError as exc:
        return QidResult(Verdict.UNDECIDED, None, None, 0.0, str(exc), "fft")
    if dl.max_imag_residual > IMAG_TOL_FFT:
        return QidResult(Verdict.UNDECIDED, None, dl, 0.0,
                         f"Fourier coefficients not real (residue {dl.max_imag_residual:.3g})", "fft")
    keys = np.array(sorted(dl.fourier_coeffs), dtype=np.int64)
    vals = np.array([dl.fourier_coeffs[k] for k in keys])
    # coefficients past N/4 are below the band tolerance; inside it a coefficient
    # is dropped only when negligible for the second moment too
    weight = np.maximum(1.0, keys.astype(float) ** 2)
    keep = (np.abs(keys) < dl.grid_size // 4) & (weight * np.abs(vals) >= trunc_tol)
    dropped = math.fsum(np.abs(vals[~keep]))
    nu = SignedAtomicMeasure.from_indices(keys[keep], vals[keep], INTEGERS)
    t = CharacteristicTriplet(0.0, nu, float(dl.drift_k), RepresentationKind.DRIFT)
    return QidResult(Verdict.QID, back.apply(t), dl, dropped + dl.truncation_bound, "", "fft")


def analyze(mu: LatticeDistribution, method: str = "auto", trunc_tol: float = DEFAULT_TRUNC_TOL,
            circle_tol: float = DEFAULT_CIRCLE_TOL) -> QidResult:
    """Dispatch: roots for supports up to 512 points, FFT beyond (``auto``)."""
    if method == "auto":
        method = "root" if mu.masses.size <= AUTO_ROOT_MAX_WIDTH else "fft"
    if method == "root":
        return analyze_finite(mu, trunc_tol, circle_tol)
    if method == "fft":
        return analyze_z(mu, trunc_tol)
    raise ValueError(f"unknown method {method!r}")


# -- Katti recursion and DPCP ------------------------------------------------


@dataclass
class KattiResult:
    start_index: int
    q: np.ndarray
    partial_abs_sums: np.ndarray

    def as_measure(self) -> SignedAtomicMeasure:
        return SignedAtomicMeasure.from_indices(np.arange(1, self.q.size + 1), self.q, INTEGERS)

    def to_dict(self) -> dict:
        return {
            "start_index": self.start_index,
            "q": self.q.tolist(),
            "partial_abs_sums": self.partial_abs_sums.tolist(),
        }


def katti_extract(mu: LatticeDistribution, max_n: int = 50) -> KattiResult:
    """Solve ``n a_{n+k} = sum_{j=1}^n j q_j a_{n+k-j}`` for ``q_1..q_max_n``.

    ``k`` is the lowest support index. When the law is QID with quasi-Levy
    measure on the positive integers, ``q_n`` is its atom at ``n`` (in
    lattice steps). Otherwise the partial sums of ``|q_n|`` typically blow up.
    """
    a = np.zeros(max_n + 1)
    head = mu.masses[: max_n + 1]
    a[: head.size] = head
    if a[0] <= 0:
        raise QidError("mass at the lowest support point must be positive")
    q = np.zeros(max_n)
    jq = np.zeros(max_n + 1)  # jq[j] = j * q_j
    for n in range(1, max_n + 1):
        s = n * a[n] - np.dot(jq[1:n], a[n - 1: 0: -1])
        q[n - 1] = s / (n * a[0])
        jq[n] = n * q[n - 1]
    return KattiResult(mu.first_index, q, np.cumsum(np.abs(q)))


@dataclass
class DpcpResult:
    is_dpcp: bool
    lam: float
    alphas: np.ndarray
    drift: float | None
    reason: str = ""
    result: QidResult | None = None

    def to_dict(self) -> dict:
        return {
            "is_dpcp": self.is_dpcp,
            "lambda": self.lam,
            "alphas": self.alphas.tolist(),
            "drift": self.drift,
            "reason": self.reason,
        }


def _normalise_exactly(w: np.ndarray) -> np.ndarray:
    """``w / sum(w)``, nudged so that ``math.fsum`` of the result is exactly 1."""
    alphas = w / math.fsum(w)
    big = int(np.argmax(np.abs(alphas)))
    for _ in range(4):
        resid = 1.0 - math.fsum(alphas)
        if resid == 0.0:
            break
        alphas[big] += resid
    return alphas


def dpcp_check(mu: LatticeDistribution, neg_tol: float = 1e-10, trunc_tol: float = DEFAULT_TRUNC_TOL) -> DpcpResult:
    """Is ``mu`` a discrete pseudo-compound Poisson law on ``N_0``?

    That holds iff it is QID with drift 0 and quasi-Levy measure on the
    positive integers; then ``lambda = nu(R)`` and ``alpha_j = nu({j})/lambda``.
    """
    empty = np.zeros(0)
    if mu.offset != 0.0 or mu.spacing != 1.0:
        return DpcpResult(False, math.nan, empty, None, "not a distribution on the integers")
    if mu.first_index < 0:
        return DpcpResult(False, math.nan, empty, None, "support extends below 0")
    if mu.first_index > 0:
        return DpcpResult(False, math.nan, empty, None, "no mass at 0: the generating function vanishes at 0")
    res = analyze(mu, trunc_tol=trunc_tol)
    if not res.is_qid:
        return DpcpResult(False, math.nan, empty, None, f"not QID ({res.reason})", res)
    drift = res.triplet.gamma
    if drift != 0:
        return DpcpResult(False, math.nan, empty, drift, f"drift is {drift:g}, not 0", res)
    nu = res.triplet.nu
    x = nu.locations()
    neg_mass = float(np.sum(np.abs(nu.weights()[x < 0])))
    if neg_mass > neg_tol:
        return DpcpResult(False, math.nan, empty, drift, f"quasi-Levy measure charges negative integers ({neg_mass:.3g})", res)
    if not nu:
        return DpcpResult(False, math.nan, empty, drift, "degenerate law (lambda = 0)", res)
    pos = x > 0
    idx = np.rint(x[pos]).astype(np.int64)
    dense = np.zeros(int(idx.max()))
    dense[idx - 1] = nu.weights()[pos]
    lam = math.fsum(dense)
    return DpcpResult(True, lam, _normalise_exactly(dense), drift, "", res)


# -- denseness approximation and reconstruction ------------------------------


def _shift_roots(mu: LatticeDistribution, roots: np.ndarray, h: float) -> LatticeDistribution | None:
    coeffs = P.polyfromroots(roots + h) * mu.masses[-1]
    if np.max(np.abs(np.imag(coeffs))) > 1e-10:
        return None
    c = np.real(coeffs).copy()
    if np.any(c < -1e-12):
        return None
    c[c < 0] = 0.0
    return LatticeDistribution(c / math.fsum(c), mu.first_index, mu.offset, mu.spacing)


def qid_approximate(mu: LatticeDistribution, h: float, max_retries: int = 40,
                    circle_tol: float = DEFAULT_CIRCLE_TOL) -> LatticeDistribution:
    """Nearby QID law: every root of the mass polynomial is moved by ``+h``.

    The coefficients are re-expanded, clamped and renormalised. If the result
    is still not QID (or has a clearly negative mass) ``h`` is halved, at most
    ``max_retries`` times.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if mu.masses.size == 1:
        return mu
    roots = polynomial_roots(mu.masses)
    for _ in range(max_retries + 1):
        cand = _shift_roots(mu, roots, h)
        if cand is not None and analyze_finite(cand, circle_tol=circle_tol).is_qid:
            return cand
        h /= 2
    raise QidError(f"no QID approximation found after {max_retries} halvings of h")


def reconstruct_charfn(res: QidResult, z):
    """``exp(Psi(z))`` from an extracted triplet."""
    res._require()
    out = np.exp(np.asarray(psi_eval(res.triplet, z)))
    return complex(out) if np.ndim(out) == 0 else out
