"""Characteristic pairs and triplets, and the characteristic exponent."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .signed_measure import (
    Lattice,
    Region,
    SignedAtomicMeasure,
    fourier_increment,
    hahn_jordan,
    restrict,
)


class RepresentationKind(str, Enum):
    """Which truncation function fixes the location parameter gamma.

    STANDARD uses ``c(x) = x 1{|x| <= 1}``, DRIFT uses ``c = 0`` and CENTER
    uses ``c(x) = x``.
    """

    STANDARD = "standard"
    DRIFT = "drift"
    CENTER = "center"


def representation(kind: RepresentationKind, x):
    x = np.asarray(x, dtype=float)
    if kind is RepresentationKind.STANDARD:
        return np.where(np.abs(x) <= 1.0, x, 0.0)
    if kind is RepresentationKind.DRIFT:
        return np.zeros_like(x)
    return x


@dataclass(frozen=True)
class CharacteristicTriplet:
    """Gaussian variance ``a``, quasi-Levy measure ``nu`` and location ``gamma``."""

    a: float
    nu: SignedAtomicMeasure
    gamma: float
    kind: RepresentationKind = RepresentationKind.DRIFT

    def __post_init__(self):
        object.__setattr__(self, "kind", RepresentationKind(self.kind))
        if self.a < 0:
            raise ValueError(f"Gaussian variance must be nonnegative, got {self.a}")
        if self.nu.weight_at(0.0) != 0.0:
            raise ValueError("quasi-Levy measure must not charge the origin")

    def to_dict(self) -> dict:
        return {"a": self.a, "nu": self.nu.to_dict(), "gamma": self.gamma, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, data: Mapping) -> "CharacteristicTriplet":
        return cls(
            float(data.get("a", 0.0)),
            SignedAtomicMeasure.from_dict(data.get("nu", {"atoms": [], "lattice": None})),
            float(data.get("gamma", 0.0)),
            RepresentationKind(data.get("kind", "drift")),
        )


@dataclass(frozen=True)
class CharacteristicPair:
    """The finite signed measure ``zeta = a delta_0 + (1 ^ x^2) nu`` and ``gamma``."""

    zeta: SignedAtomicMeasure
    gamma: float
    kind: RepresentationKind = RepresentationKind.STANDARD


def g_c(x, z, kind: RepresentationKind = RepresentationKind.STANDARD):
    """Integrand of the pair form of the exponent; equals ``-z^2/2`` at ``x = 0``."""
    if RepresentationKind(kind) is not RepresentationKind.STANDARD:
        raise ValueError("g_c is only defined for the standard representation function")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    c = representation(RepresentationKind.STANDARD, x)
    denom = np.minimum(1.0, x * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (np.exp(1j * z * x) - 1.0 - 1j * z * c) / denom
    out = np.where(x == 0.0, -0.5 * z * z + 0j, val)
    return complex(out) if out.ndim == 0 else out


def psi_eval(t: CharacteristicTriplet, z):
    """Characteristic exponent ``i gamma z - a z^2/2 + sum w (e^{izx} - 1 - i z c(x))``."""
    z_arr = np.asarray(z, dtype=float)
    out = 1j * t.gamma * z_arr - 0.5 * t.a * z_arr * z_arr
    if t.nu:
        c = representation(t.kind, t.nu.locations()) @ t.nu.weights()
        jumps = fourier_increment(t.nu, z_arr).reshape(z_arr.shape)
        out = out + jumps - 1j * c * z_arr
    out = np.asarray(out, dtype=complex)
    return complex(out) if out.ndim == 0 else out


def triplet_to_pair(t: CharacteristicTriplet) -> CharacteristicPair:
    x = t.nu.locations()
    zeta = SignedAtomicMeasure(list(zip(x.tolist(), (np.minimum(1.0, x * x) * t.nu.weights()).tolist())),
                               lattice=t.nu.lattice) if t.nu else SignedAtomicMeasure.zero(t.nu.lattice)
    if t.a > 0:
        zeta = zeta + SignedAtomicMeasure.dirac(0.0, t.a, lattice=_lattice_with_origin(t.nu.lattice))
    return CharacteristicPair(zeta, t.gamma, t.kind)


def _lattice_with_origin(lat: Lattice | None) -> Lattice | None:
    if lat is None:
        return None
    try:
        lat.index_of(0.0)
        return lat
    except ValueError:
        return None


def pair_to_triplet(p: CharacteristicPair) -> CharacteristicTriplet:
    a = p.zeta.weight_at(0.0)
    if a < 0:
        raise ValueError("not a valid QID pair: the atom of zeta at 0 is negative")
    off = restrict(p.zeta, Region.nonzero())
    x = off.locations()
    if off:
        nu = SignedAtomicMeasure(list(zip(x.tolist(), (off.weights() / np.minimum(1.0, x * x)).tolist())),
                                 lattice=off.lattice)
    else:
        nu = SignedAtomicMeasure.zero(off.lattice)
    return CharacteristicTriplet(a, nu, p.gamma, p.kind)


def rebase_gamma(t: CharacteristicTriplet, target: RepresentationKind) -> CharacteristicTriplet:
    """Change representation function; ``gamma_2 = gamma_1 + int (c_2 - c_1) dnu``."""
    target = RepresentationKind(target)
    if target is t.kind:
        return t
    shift = t.nu.integrate(lambda x: representation(target, x) - representation(t.kind, x))
    return CharacteristicTriplet(t.a, t.nu, t.gamma + shift, target)


def convolve_triplets(t1: CharacteristicTriplet, t2: CharacteristicTriplet) -> CharacteristicTriplet:
    """Triplet of the convolution of the two laws (parameters add)."""
    t2 = rebase_gamma(t2, t1.kind)
    return CharacteristicTriplet(t1.a + t2.a, t1.nu + t2.nu, t1.gamma + t2.gamma, t1.kind)


def affine_transform(t: CharacteristicTriplet, m: float, b: float = 0.0) -> CharacteristicTriplet:
    """Triplet of ``m X + b`` given the triplet of ``X``."""
    if m == 0:
        raise ValueError("dilation factor must be nonzero")
    nu_bar = t.nu.map_affine(m)
    if t.kind is RepresentationKind.STANDARD:
        c = lambda x: representation(t.kind, x)
        gamma = b + m * t.gamma + t.nu.integrate(lambda x: c(m * x) - m * c(x))
    else:
        gamma = m * t.gamma + b
    return CharacteristicTriplet(t.a * m * m, nu_bar, gamma, t.kind)


@dataclass(frozen=True)
class VarianceProbe:
    z: tuple[float, ...]
    values: tuple[float, ...]
    estimate: float
    spread: float


def gaussian_variance_probe(phi: Callable[[float], complex], z_max: float) -> VarianceProbe:
    """Estimate ``a = -2 lim Psi(z)/z^2`` from three probes up to ``z_max``.

    Diagnostic only: the reported spread shows how far from the limit the
    probes still are.
    """
    if not z_max > 0:
        raise ValueError("z_max must be positive")
    zs = (z_max / 4, z_max / 2, z_max)
    vals = tuple(float((-2.0 * complex(phi(z)) / (z * z)).real) for z in zs)
    # the non-Gaussian part of Psi is bounded, so values behave like a + C/z^2
    estimate = (4.0 * vals[2] - vals[1]) / 3.0
    return VarianceProbe(zs, vals, estimate, max(vals) - min(vals))


DEFAULT_Z_GRID = np.logspace(-2, 3, 128)
# Gaussian smoothing variances used for the averaged inequality
_SMOOTHING_VARIANCES = (0.01, 1.0, 100.0)
_RTOL = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    applicable: bool = True
    detail: str = ""


@dataclass
class ValidationReport:
    """Outcome of the necessary conditions; a failure rules the triplet out."""

    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "applicable": c.applicable, "margin": c.margin, "detail": c.detail}
                for c in self.checks
            ],
        }


def _compare(name, lhs, rhs, detail="") -> Check:
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    margin = lhs - rhs
    slack = _RTOL * (1.0 + np.abs(lhs) + np.abs(rhs))
    worst = int(np.argmin(margin + slack))
    return Check(name, bool(np.all(margin >= -slack)), float(margin[worst]), True, detail)


def validate_necessary(t: CharacteristicTriplet, z_grid=None) -> ValidationReport:
    """Inequalities every QID triplet satisfies.

    A failed check proves the triplet belongs to no distribution; passing all
    of them proves nothing. The cosine bound is a for-all-z statement and is
    only tested on ``z_grid``.
    """
    z = DEFAULT_Z_GRID if z_grid is None else np.asarray(z_grid, dtype=float)
    parts = hahn_jordan(t.nu)
    pos, neg = parts.positive, parts.negative
    a = t.a

    def both(f):
        return pos.integrate(f), neg.integrate(f)

    report = ValidationReport()
    zx_pos = np.multiply.outer(z, pos.locations())
    zx_neg = np.multiply.outer(z, neg.locations())
    lhs = 0.5 * a * z * z + (2.0 * np.sin(0.5 * zx_pos) ** 2) @ pos.weights() if pos else 0.5 * a * z * z
    rhs = (2.0 * np.sin(0.5 * zx_neg) ** 2) @ neg.weights() if neg else np.zeros_like(z)
    report.checks.append(_compare("cosine_bound", lhs, rhs, f"{z.size} grid points"))

    lhs2, rhs2 = [], []
    for s in _SMOOTHING_VARIANCES:
        p, n = both(lambda x: -np.expm1(-0.5 * s * x * x))
        lhs2.append(0.5 * a * s + p)
        rhs2.append(n)
    report.checks.append(_compare("gaussian_smoothed", lhs2, rhs2, f"variances {_SMOOTHING_VARIANCES}"))

    p, n = both(lambda x: x * x / (1.0 + x * x))
    report.checks.append(_compare("rational_weight", a + p, n))

    if a == 0:
        report.checks.append(_compare("total_mass", pos.total_mass(), neg.total_mass()))
        p, n = both(lambda x: np.minimum(1.0, np.abs(x)))
        report.checks.append(_compare("truncated_first_moment", p, n))
    else:
        report.checks.append(Check("total_mass", True, math.nan, False, "only for a = 0"))
        report.checks.append(Check("truncated_first_moment", True, math.nan, False, "only for a = 0"))
    return report
