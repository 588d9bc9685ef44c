"""Quantities read off a characteristic triplet.

Moments and support bounds come straight from the triplet. Sequence
diagnostics and mass reconstruction work on whole analysis results."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import NotQidResultError, QidError
from .lattice import LatticeDistribution, QidResult
from .signed_measure import INTEGERS, LATTICE_TOL
from .triplet import CharacteristicTriplet, RepresentationKind, psi_eval, rebase_gamma


class WeightFamily(str, Enum):
    POLYNOMIAL = "polynomial"
    LOG = "log"
    STRETCHED_EXP = "stretched_exp"
    EXP = "exp"


@dataclass(frozen=True)
class WeightFunction:
    """Submultiplicative weight ``h`` on Z, ``h(m + n) <= B h(m) h(n)``.

    ``grs`` says whether ``log h(n)/n -> 0``; under it finiteness of the
    h-moment passes between a law and its quasi-Levy measure.
    """

    family: WeightFamily
    alpha: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "family", WeightFamily(self.family))
        if self.family in (WeightFamily.POLYNOMIAL, WeightFamily.STRETCHED_EXP) and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.family is WeightFamily.STRETCHED_EXP and not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")

    @classmethod
    def polynomial(cls, alpha: float) -> "WeightFunction":
        return cls(WeightFamily.POLYNOMIAL, alpha)

    @classmethod
    def log(cls) -> "WeightFunction":
        return cls(WeightFamily.LOG)

    @classmethod
    def stretched_exp(cls, alpha: float, beta: float) -> "WeightFunction":
        return cls(WeightFamily.STRETCHED_EXP, alpha, beta)

    @classmethod
    def exp(cls, alpha: float) -> "WeightFunction":
        return cls(WeightFamily.EXP, alpha)

    @property
    def grs(self) -> bool:
        return self.family is not WeightFamily.EXP or self.alpha == 0

    @property
    def constant(self) -> float:
        """Submultiplicativity constant ``B``."""
        if self.family is WeightFamily.POLYNOMIAL:
            return 2.0 ** self.alpha
        if self.family is WeightFamily.LOG:
            return 1.0 + math.log(2.0)
        return 1.0

    def __call__(self, n):
        n = np.abs(np.asarray(n, dtype=float)) if self.family is not WeightFamily.EXP else np.asarray(n, dtype=float)
        if self.family is WeightFamily.POLYNOMIAL:
            return np.maximum(n, 1.0) ** self.alpha
        if self.family is WeightFamily.LOG:
            return np.log(np.maximum(n, math.e))
        if self.family is WeightFamily.STRETCHED_EXP:
            return np.exp(self.alpha * n ** self.beta)
        return np.exp(self.alpha * n)


def _integer_atoms(obj) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(obj, LatticeDistribution):
        if obj.offset != 0.0 or obj.spacing != 1.0:
            raise QidError("h-moments need a distribution on Z")
        return obj.indices(), obj.masses
    if isinstance(obj, QidResult):
        obj = obj.nu
    x = obj.locations()
    n = np.rint(x)
    if np.any(np.abs(x - n) > LATTICE_TOL * np.maximum(1.0, np.abs(x))):
        raise QidError("h-moments need atoms on Z")
    return n.astype(np.int64), obj.weights()


@dataclass
class HMoment:
    value: float
    grs: bool
    partial_sums: np.ndarray

    def tail_ratios(self) -> np.ndarray:
        """Ratios of successive increments of the partial sums."""
        inc = np.diff(self.partial_sums)
        with np.errstate(divide="ignore", invalid="ignore"):
            return inc[1:] / inc[:-1]

    def to_dict(self) -> dict:
        return {"value": self.value, "grs": self.grs, "partial_sums": self.partial_sums.tolist()}


def h_moment(obj, w: WeightFunction, trunc: int) -> HMoment:
    """``sum_{|n| <= trunc} w(n) |weight(n)|`` and its partial sums in ``trunc``.

    A finite computation cannot prove the full sum finite; the partial sums
    are returned so their growth can be inspected.
    """
    n, weights = _integer_atoms(obj)
    keep = np.abs(n) <= trunc
    n, weights = n[keep], weights[keep]
    per_level = np.zeros(trunc + 1)
    np.add.at(per_level, np.abs(n), w(n) * np.abs(weights))
    partial = np.cumsum(per_level)
    return HMoment(float(math.fsum(per_level)), w.grs, partial)


@dataclass
class Moments:
    mean: float
    variance: float
    exp_moment: float | None = None
    alpha: float | None = None
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"mean": self.mean, "variance": self.variance, "errors": self.errors}
        if self.alpha is not None:
            out["alpha"] = self.alpha
            out["exp_moment"] = self.exp_moment
        return out


def moments(t: CharacteristicTriplet, alpha: float | None = None, tail_bound: float = 0.0) -> Moments:
    """Mean, variance and optionally ``E exp(alpha X)`` by summing over atoms.

    ``tail_bound`` is the total variation of quasi-Levy atoms dropped by a
    truncation. Each error term multiplies it by the integrand's size at the
    edge of the stored atoms.
    """
    nu = t.nu
    mean = rebase_gamma(t, RepresentationKind.CENTER).gamma
    x = nu.locations()
    w = nu.weights()
    variance = t.a + math.fsum(x * x * w)
    edge = (float(np.max(np.abs(x))) if x.size else 0.0) + 1.0
    errors = {"mean": tail_bound * edge, "variance": tail_bound * edge * edge}
    out = Moments(mean, variance, errors=errors)
    if alpha is not None:
        gamma_std = rebase_gamma(t, RepresentationKind.STANDARD).gamma
        inner = np.expm1(alpha * x) - alpha * x * (np.abs(x) <= 1.0)
        log_m = 0.5 * alpha * alpha * t.a + math.fsum(inner * w) + alpha * gamma_std
        out.alpha = alpha
        out.exp_moment = math.exp(log_m)
        errors["exp_moment"] = out.exp_moment * math.expm1(tail_bound * math.exp(abs(alpha) * edge))
    return out


@dataclass
class SupportInfo:
    bounded_below: bool
    inf_support: float | None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"bounded_below": self.bounded_below, "inf_support": self.inf_support, "reason": self.reason}


def support_info(t: CharacteristicTriplet) -> SupportInfo:
    """Lower support bound when ``a = 0`` and ``nu`` (both parts) lives on ``[0, inf)``.

    Then the infimum of the support is the drift. A negative answer only
    means the criterion is not met; a law such as b(1, 3/4) is bounded below
    although its quasi-Levy measure sits on the negative integers.
    """
    t = rebase_gamma(t, RepresentationKind.DRIFT)
    if t.a != 0:
        return SupportInfo(False, None, "Gaussian component present")
    if t.nu and float(np.min(t.nu.locations())) < 0:
        return SupportInfo(False, None, "quasi-Levy measure charges (-inf, 0); criterion not met")
    return SupportInfo(True, t.gamma, "")


def laplace_eval(t: CharacteristicTriplet, u):
    """``E exp(-u X) = exp(-gamma_0 u - sum (1 - e^{-u x}) nu({x}))`` for ``u >= 0``."""
    info = support_info(t)
    if not info.bounded_below:
        raise QidError(f"Laplace formula needs a = 0 and nu on [0, inf): {info.reason}")
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise ValueError("u must be nonnegative")
    gamma0 = info.inf_support
    expo = -gamma0 * u_arr
    if t.nu:
        expo = expo + np.expm1(-np.multiply.outer(u_arr, t.nu.locations())) @ t.nu.weights()
    out = np.exp(expo)
    return float(out) if out.ndim == 0 else out


def integer_support_check(t: CharacteristicTriplet, tol: float = 1e-9) -> bool:
    """``a = 0``, ``nu`` on Z and an integer drift."""
    if t.a != 0:
        return False
    t = rebase_gamma(t, RepresentationKind.DRIFT)
    if abs(t.gamma - round(t.gamma)) > tol:
        return False
    nu = t.nu
    if not nu:
        return True
    if nu.lattice is not None:
        return nu.lattice.shift_to(INTEGERS) is not None
    x = nu.locations()
    return bool(np.all(np.abs(x - np.rint(x)) <= LATTICE_TOL * np.maximum(1.0, np.abs(x))))


class ConvergenceVerdict(str, Enum):
    CONVERGING = "converging"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


@dataclass
class ConvergenceReport:
    drift_match: list
    l1: np.ndarray
    total_variation: np.ndarray
    target_total_variation: float
    verdict: ConvergenceVerdict
    threshold: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "threshold": self.threshold,
            "drift_match": list(self.drift_match),
            "l1": self.l1.tolist(),
            "total_variation": self.total_variation.tolist(),
            "target_total_variation": self.target_total_variation,
        }


def _check_integer(res: QidResult) -> CharacteristicTriplet:
    if not res.is_qid:
        raise NotQidResultError(f"sequence member is {res.verdict.value}: {res.reason}")
    t = rebase_gamma(res.triplet, RepresentationKind.DRIFT)
    if not integer_support_check(t):
        raise QidError("convergence diagnostics need laws on Z")
    return t


def convergence_diag(seq: list, target: QidResult, threshold: float = 0.25) -> ConvergenceReport:
    """Compare a sequence of analysed laws on Z with a target.

    For such laws, weak convergence is equivalent to eventual equality of the
    drifts plus l1 convergence of the quasi-Levy measures. Over the second
    half of the sequence the verdict is ``converging`` when drifts match, the
    l1 distance does not increase and ends below ``threshold``; ``diverging``
    when the total variation of the quasi-Levy measures keeps growing and the
    l1 distance does not shrink.
    """
    if not seq:
        raise ValueError("empty sequence")
    tt = _check_integer(target)
    drift_match, l1, tv = [], [], []
    for res in seq:
        t = _check_integer(res)
        drift_match.append(int(round(t.gamma)) == int(round(tt.gamma)))
        l1.append((t.nu - tt.nu).total_variation())
        tv.append(t.nu.total_variation())
    l1, tv = np.array(l1), np.array(tv)
    tail = slice(len(seq) // 2, None)
    slack = 1e-12
    drifts_ok = all(drift_match[tail])
    d_l1 = np.diff(l1[tail])
    if drifts_ok and np.all(d_l1 <= slack * (1 + l1[tail][:-1])) and l1[-1] <= threshold:
        verdict = ConvergenceVerdict.CONVERGING
    elif len(seq) > 1 and np.all(np.diff(tv[tail]) > 0) and np.all(d_l1 >= -slack) and l1[-1] > threshold:
        verdict = ConvergenceVerdict.DIVERGING
    else:
        verdict = ConvergenceVerdict.INCONCLUSIVE
    return ConvergenceReport(drift_match, l1, tv, tt.nu.total_variation(), verdict, threshold)


def support_equation_residuals(mu: LatticeDistribution, t: CharacteristicTriplet, max_x: int = 50) -> np.ndarray:
    """Residuals of ``sum_{y<=x} y mu(y) = sum_{0<y<=x} mu([0, x-y]) y nu(y) + gamma_0 mu([0, x])``
    at ``x = 0..max_x`` for a law on ``N_0``."""
    if mu.offset != 0.0 or mu.spacing != 1.0 or mu.first_index < 0:
        raise QidError("the support equation needs a law on N_0")
    t = rebase_gamma(t, RepresentationKind.DRIFT)
    a = np.zeros(max_x + 1)
    head = mu.masses[: max(0, max_x + 1 - mu.first_index)]
    a[mu.first_index: mu.first_index + head.size] = head
    cdf = np.cumsum(a)
    y = np.arange(max_x + 1)
    nu = np.array([t.nu.weight_at(float(k)) for k in y])
    nu[0] = 0.0
    lhs = np.cumsum(y * a)
    rhs = np.array([np.dot(cdf[x - y[1: x + 1]], y[1: x + 1] * nu[1: x + 1]) for x in y]) + t.gamma * cdf
    return lhs - rhs


@dataclass
class Synthesis:
    z: np.ndarray
    charfn: np.ndarray
    first_index: int | None = None
    masses: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {"z": self.z.tolist(), "charfn": [[float(v.real), float(v.imag)] for v in self.charfn]}
        if self.masses is not None:
            out["first_index"] = self.first_index
            out["masses"] = self.masses.tolist()
        return out


def synthesize(t: CharacteristicTriplet, grid: int, trim_tol: float = 1e-13) -> Synthesis:
    """Sample ``exp(Psi)`` at ``z = 2 pi l / grid`` and, for laws on Z,
    recover the masses by inverse FFT over a window of ``grid`` integers
    centred on the mean."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    z = 2 * np.pi * np.arange(grid) / grid
    phi = np.exp(np.asarray(psi_eval(t, z)))
    if not integer_support_check(t):
        return Synthesis(z, phi)
    k0 = int(math.floor(moments(t).mean - grid / 2))
    masses = (np.fft.fft(phi * np.exp(-1j * k0 * z)) / grid).real
    big = np.flatnonzero(np.abs(masses) > trim_tol)
    if big.size:
        masses = masses[big[0]: big[-1] + 1]
        k0 += int(big[0])
    return Synthesis(z, phi, k0, masses)
