"""Logarithmic series for laws with a dominant atom, plus the logarithm of a
single linear factor of a mass polynomial.

If ``p > 1/2`` of the mass sits at one point, ``log(p + q s)`` with
``|q s| < p`` expands as a convergent power series; its convolution powers
give the quasi-Levy measure directly.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DominantAtomError, QidError
from .lattice import LatticeDistribution, geometric_log_tail, rescale, series_terms
from .signed_measure import INTEGERS, ComplexAtomicMeasure, Region, SignedAtomicMeasure, convolve, restrict
from .triplet import CharacteristicTriplet, RepresentationKind, psi_eval, representation

DEFAULT_TAIL_TOL = 1e-14
DOMINANCE_MARGIN = 1e-9
CIRCLE_MARGIN = 1e-9
MIXTURE_GRID = np.linspace(-8.0, 8.0, 64)
MIXTURE_GRID_TOL = 1e-8


def _dense_log_series(start: int, step: np.ndarray, terms: int) -> SignedAtomicMeasure:
    """``sum_{m=1}^terms (-1)^(m+1)/m * step^{*m}`` restricted off 0.

    ``step`` is a dense weight vector on Z beginning at index ``start``;
    the ratio factor is expected to be folded into it already.
    """
    width = step.size - 1
    lo = min(start, terms * start)
    hi = max(start + width, terms * (start + width))
    acc = np.zeros(hi - lo + 1)
    term = np.ones(1)
    for m in range(1, terms + 1):
        term = np.convolve(term, step)
        j = m * start - lo
        acc[j: j + term.size] += ((-1.0) ** (m + 1) / m) * term
    if lo <= 0 <= hi:
        acc[-lo] = 0.0
    return SignedAtomicMeasure.from_dense(lo, acc, INTEGERS)


def _sparse_log_series(step: SignedAtomicMeasure, terms: int) -> SignedAtomicMeasure:
    acc = SignedAtomicMeasure.zero(step.lattice)
    term = None
    for m in range(1, terms + 1):
        term = step if term is None else convolve(term, step)
        acc = acc + term * ((-1.0) ** (m + 1) / m)
    return restrict(acc, Region.nonzero())


def _terms_for(ratio: float, tail_tol: float) -> int:
    return max(1, series_terms(ratio, 1, tail_tol)) if ratio > 0 else 0


def cuppens_series(mu: LatticeDistribution, tail_tol: float = DEFAULT_TAIL_TOL) -> CharacteristicTriplet:
    """Triplet of a lattice law with an atom ``p > 1/2`` at ``lam``.

    With ``sigma = (mu - p delta_lam)/(1 - p)`` the quasi-Levy measure is
    ``sum_m (-1)^(m+1)/m ((1-p)/p)^m (delta_{-lam} * sigma)^{*m}`` off 0 and
    the drift is ``lam``. Terms are added until the geometric tail of the
    coefficients drops below ``tail_tol``.
    """
    y, back = rescale(mu)
    j = int(np.argmax(y.masses))
    p = float(y.masses[j])
    if p - 0.5 <= DOMINANCE_MARGIN:
        raise DominantAtomError(f"dominant-atom hypothesis fails: largest atom is {p!r}")
    lam = y.first_index + j
    q = 1.0 - p
    rest = y.masses.copy()
    rest[j] = 0.0
    if q <= 0 or not np.any(rest):
        nu = SignedAtomicMeasure.zero(INTEGERS)
    else:
        # delta_{-lam} * sigma, with the factor q/p and 1/q of sigma merged into 1/p
        step = rest / p
        terms = _terms_for(q / p, tail_tol)
        nu = _dense_log_series(y.first_index - lam, step, terms)
    return back.apply(CharacteristicTriplet(0.0, nu, float(lam), RepresentationKind.DRIFT))


def cuppens_tail_bound(p: float, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Total-variation bound of the discarded terms for dominant mass ``p``."""
    t = (1.0 - p) / p
    return geometric_log_tail(t, _terms_for(t, tail_tol)) if t > 0 else 0.0


def _charfn_of(mu2) -> Callable:
    if isinstance(mu2, LatticeDistribution):
        return mu2.charfn
    if callable(mu2):
        return mu2
    raise TypeError("mu2 must be a LatticeDistribution or a callable characteristic function")


def mixture_series(
    mu1_triplet: CharacteristicTriplet,
    sigma: SignedAtomicMeasure,
    p: float,
    tail_tol: float = DEFAULT_TAIL_TOL,
    mu2=None,
    on_mismatch: str = "raise",
) -> CharacteristicTriplet:
    """Triplet of ``p mu1 + (1-p) mu2`` where ``sigma`` has transform ``mu2^/mu1^``.

    The correction ``sum_m (-1)^(m+1)/m ((1-p)/p)^m sigma^{*m}`` (off 0) is
    added to the quasi-Levy measure of ``mu1``. If ``mu2`` is given, the
    relation between ``sigma`` and the two laws is checked on a 64-point grid;
    ``on_mismatch`` chooses between raising and warning.
    """
    if not 0.5 < p < 1:
        raise ValueError("p must lie in (1/2, 1)")
    if on_mismatch not in ("raise", "warn"):
        raise ValueError("on_mismatch must be 'raise' or 'warn'")
    q = 1.0 - p
    tv = sigma.total_variation()
    if tv >= p / q - CIRCLE_MARGIN:
        raise QidError(f"|sigma|(R) = {tv:.6g} must stay below p/(1-p) = {p / q:.6g}")
    if mu2 is not None:
        lhs = np.exp(np.asarray(psi_eval(mu1_triplet, MIXTURE_GRID))) * sigma_fourier(sigma, MIXTURE_GRID)
        err = float(np.max(np.abs(lhs - _charfn_of(mu2)(MIXTURE_GRID))))
        if err > MIXTURE_GRID_TOL:
            msg = f"sigma does not match mu2/mu1 on the check grid (max error {err:.3g})"
            if on_mismatch == "raise":
                raise QidError(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    if not sigma:
        return mu1_triplet
    ratio = q / p * tv
    terms = _terms_for(ratio, tail_tol)
    step = sigma * (q / p)
    if step.lattice is not None and step.lattice.is_integer:
        start, dense = step.dense()
        extra = _dense_log_series(start, dense, terms)
    else:
        extra = _sparse_log_series(step, terms)
    kind = mu1_triplet.kind
    gamma = mu1_triplet.gamma
    if kind is not RepresentationKind.DRIFT:
        gamma += extra.integrate(lambda x: representation(kind, x))
    return CharacteristicTriplet(mu1_triplet.a, mu1_triplet.nu + extra, gamma, kind)


def sigma_fourier(sigma: SignedAtomicMeasure, z):
    if not sigma:
        return np.zeros(np.shape(z), dtype=complex)
    return np.exp(1j * np.multiply.outer(np.asarray(z, dtype=float), sigma.locations())) @ sigma.weights()


@dataclass(frozen=True)
class TwoPointFactor:
    """``delta_1 - xi delta_0 = constant * delta_drift * exp-part with measure nu``."""

    nu: ComplexAtomicMeasure
    drift: int
    constant: complex
    tail_bound: float


def factor_two_point(xi: complex, tol: float = 1e-14) -> TwoPointFactor:
    """Logarithm of the linear factor ``w - xi`` of a mass polynomial.

    For ``|xi| < 1`` the factor is ``w (1 - xi/w)``: drift 1 and atoms
    ``-xi^m/m`` at ``-m``. For ``|xi| > 1`` it is ``-xi (1 - w/xi)``: drift 0
    and atoms ``-xi^-m/m`` at ``m``. In both cases the transform of the factor
    equals ``(1 - xi) exp(i drift z + sum nu(n) (e^{inz} - 1))``.
    """
    xi = complex(xi)
    r = abs(xi)
    if abs(r - 1.0) <= CIRCLE_MARGIN:
        raise QidError(f"|xi| = {r!r} is within {CIRCLE_MARGIN:g} of 1")
    inside = r < 1
    base = xi if inside else 1.0 / xi
    rho = abs(base)
    terms = series_terms(rho, 1, tol) if rho > 0 else 0
    m = np.arange(1, terms + 1)
    w = -np.power(base, m) / m
    sign = -1 if inside else 1
    atoms = {int(sign * k): complex(v) for k, v in zip(m, w) if v != 0}
    tail = geometric_log_tail(rho, terms) if rho > 0 else 0.0
    return TwoPointFactor(ComplexAtomicMeasure(atoms), 1 if inside else 0, 1.0 - xi, tail)
