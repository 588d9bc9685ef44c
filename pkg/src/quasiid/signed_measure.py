"""Finite signed atomic measures on the real line.

A measure is a finite map from location to nonzero weight. When the
measure carries a :class:`Lattice` tag every location is ``offset +
spacing * n`` for an integer ``n`` and atoms are keyed by that integer, so
sums and convolutions on a common lattice are exact in the locations.
Untagged measures are keyed by float location and atoms closer than
``MERGE_TOL`` are merged (lossy, but it avoids spurious duplicates from
floating point sums).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

MERGE_TOL = 1e-12
LATTICE_TOL = 1e-9

# Dense convolution is used when the index span is not much larger than
# the number of pairwise products.
_DENSE_SLACK = 4


@dataclass(frozen=True)
class Lattice:
    """The grid ``offset + spacing * Z``."""

    offset: float = 0.0
    spacing: float = 1.0

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError(f"lattice spacing must be positive, got {self.spacing}")

    def location(self, index):
        return self.offset + self.spacing * np.asarray(index, dtype=float)

    def index_of(self, x: float) -> int:
        n = (x - self.offset) / self.spacing
        k = int(round(n))
        if abs(self.offset + self.spacing * k - x) > LATTICE_TOL * max(1.0, abs(x)):
            raise ValueError(f"location {x} is not on the lattice {self}")
        return k

    def shift_to(self, other: "Lattice") -> int | None:
        """Integer ``s`` with ``self.location(n) == other.location(n + s)``, if any."""
        if not math.isclose(self.spacing, other.spacing, rel_tol=1e-12):
            return None
        d = (self.offset - other.offset) / other.spacing
        s = round(d)
        if abs(d - s) > LATTICE_TOL * max(1.0, abs(d)):
            return None
        return int(s)

    @property
    def is_integer(self) -> bool:
        return self.offset == 0.0 and self.spacing == 1.0

    def to_dict(self) -> dict:
        return {"offset": self.offset, "spacing": self.spacing}


INTEGERS = Lattice(0.0, 1.0)


def _merge_float(locs: np.ndarray, weights: np.ndarray) -> dict:
    """Sum weights of locations within ``MERGE_TOL`` of their predecessor."""
    if locs.size == 0:
        return {}
    order = np.argsort(locs, kind="stable")
    locs = locs[order]
    weights = weights[order]
    starts = np.concatenate(([True], np.diff(locs) > MERGE_TOL))
    idx = np.flatnonzero(starts)
    sums = np.add.reduceat(weights, idx)
    keep = sums != 0.0
    return dict(zip(locs[idx][keep].tolist(), sums[keep].tolist()))


def _merge_int(keys: np.ndarray, weights: np.ndarray) -> dict:
    if keys.size == 0:
        return {}
    uniq, inv = np.unique(keys, return_inverse=True)
    sums = np.zeros(uniq.size, dtype=weights.dtype)
    np.add.at(sums, inv, weights)
    keep = sums != 0
    return dict(zip(uniq[keep].tolist(), sums[keep].tolist()))


class SignedAtomicMeasure:
    """A finite signed measure with finitely many atoms.

    Instances are immutable. Build them from ``{location: weight}`` pairs,
    or with :meth:`from_indices` for lattice-tagged measures.
    """

    __slots__ = ("_atoms", "_lattice")

    def __init__(self, atoms: Mapping[float, float] | Iterable = (), lattice: Lattice | None = None):
        items = atoms.items() if isinstance(atoms, Mapping) else atoms
        pairs = [(float(x), float(w)) for x, w in items]
        if lattice is None:
            if pairs:
                locs, ws = np.array(pairs, dtype=float).T
                self._atoms = _merge_float(locs, ws)
            else:
                self._atoms = {}
        else:
            keys = np.array([lattice.index_of(x) for x, _ in pairs], dtype=np.int64)
            ws = np.array([w for _, w in pairs], dtype=float)
            self._atoms = _merge_int(keys, ws)
        self._lattice = lattice

    @classmethod
    def from_indices(cls, indices, weights, lattice: Lattice = INTEGERS) -> "SignedAtomicMeasure":
        obj = cls.__new__(cls)
        keys = np.asarray(indices, dtype=np.int64).ravel()
        ws = np.asarray(weights, dtype=float).ravel()
        if keys.shape != ws.shape:
            raise ValueError("indices and weights must have the same length")
        obj._atoms = _merge_int(keys, ws)
        obj._lattice = lattice
        return obj

    @classmethod
    def from_dense(cls, start: int, weights, lattice: Lattice = INTEGERS) -> "SignedAtomicMeasure":
        """Atoms ``weights[j]`` at lattice index ``start + j``; zero entries are skipped."""
        ws = np.asarray(weights, dtype=float)
        nz = np.flatnonzero(ws)
        obj = cls.__new__(cls)
        obj._atoms = dict(zip((nz + start).tolist(), ws[nz].tolist()))
        obj._lattice = lattice
        return obj

    @classmethod
    def dirac(cls, x: float, weight: float = 1.0, lattice: Lattice | None = None) -> "SignedAtomicMeasure":
        return cls({x: weight}, lattice=lattice)

    @classmethod
    def zero(cls, lattice: Lattice | None = None) -> "SignedAtomicMeasure":
        return cls({}, lattice=lattice)

    # -- basic queries ---------------------------------------------------

    @property
    def lattice(self) -> Lattice | None:
        return self._lattice

    def __len__(self) -> int:
        return len(self._atoms)

    def __bool__(self) -> bool:
        return bool(self._atoms)

    def _sorted_keys(self):
        return sorted(self._atoms)

    def indices(self) -> np.ndarray:
        if self._lattice is None:
            raise ValueError("measure is not lattice-tagged")
        return np.array(self._sorted_keys(), dtype=np.int64)

    def locations(self) -> np.ndarray:
        keys = np.array(self._sorted_keys(), dtype=float if self._lattice is None else np.int64)
        if self._lattice is None:
            return keys.astype(float)
        return self._lattice.location(keys)

    def weights(self) -> np.ndarray:
        return np.array([self._atoms[k] for k in self._sorted_keys()], dtype=float)

    def items(self) -> list[tuple[float, float]]:
        return list(zip(self.locations().tolist(), self.weights().tolist()))

    def weight_at(self, x: float) -> float:
        if self._lattice is None:
            for loc, w in self._atoms.items():
                if abs(loc - x) <= MERGE_TOL:
                    return w
            return 0.0
        try:
            k = self._lattice.index_of(x)
        except ValueError:
            return 0.0
        return self._atoms.get(k, 0.0)

    def total_mass(self) -> float:
        return math.fsum(self._atoms.values())

    def total_variation(self) -> float:
        return math.fsum(abs(w) for w in self._atoms.values())

    def integrate(self, f) -> float:
        """Sum of ``f(location) * weight`` over the atoms; ``f`` is vectorised."""
        if not self._atoms:
            return 0.0
        return float(np.sum(np.asarray(f(self.locations()), dtype=float) * self.weights()))

    def is_positive(self) -> bool:
        return all(w > 0 for w in self._atoms.values())

    def as_float(self) -> "SignedAtomicMeasure":
        """Drop the lattice tag."""
        if self._lattice is None:
            return self
        return SignedAtomicMeasure(self.items())

    # -- algebra ---------------------------------------------------------

    def _binary(self, other: "SignedAtomicMeasure", sign: float) -> "SignedAtomicMeasure":
        a, b = self._lattice, other._lattice
        if a is not None and b is not None:
            s = b.shift_to(a)
            if s is not None:
                keys = np.concatenate((np.fromiter(self._atoms, np.int64, len(self)),
                                       np.fromiter(other._atoms, np.int64, len(other)) + s))
                ws = np.concatenate((np.fromiter(self._atoms.values(), float, len(self)),
                                     sign * np.fromiter(other._atoms.values(), float, len(other))))
                return SignedAtomicMeasure.from_indices(keys, ws, a)
        # an empty side must not strip the other side's tag
        if not other._atoms:
            return self
        if not self._atoms:
            return other if sign > 0 else -other
        locs = np.concatenate((self.locations(), other.locations()))
        ws = np.concatenate((self.weights(), sign * other.weights()))
        out = SignedAtomicMeasure.__new__(SignedAtomicMeasure)
        out._atoms = _merge_float(locs, ws)
        out._lattice = None
        return out

    def __add__(self, other):
        if not isinstance(other, SignedAtomicMeasure):
            return NotImplemented
        return self._binary(other, 1.0)

    def __sub__(self, other):
        if not isinstance(other, SignedAtomicMeasure):
            return NotImplemented
        return self._binary(other, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, c):
        c = float(c)
        out = SignedAtomicMeasure.__new__(SignedAtomicMeasure)
        out._atoms = {k: w * c for k, w in self._atoms.items() if w * c != 0.0}
        out._lattice = self._lattice
        return out

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def __eq__(self, other):
        if not isinstance(other, SignedAtomicMeasure):
            return NotImplemented
        return self._lattice == other._lattice and self._atoms == other._atoms

    def __hash__(self):
        return hash((self._lattice, tuple(sorted(self._atoms.items()))))

    def allclose(self, other: "SignedAtomicMeasure", atol: float = 1e-12) -> bool:
        return l1_distance(self, other) <= atol

    def map_affine(self, m: float, b: float = 0.0) -> "SignedAtomicMeasure":
        """Image measure under ``x -> m x + b`` (``m != 0``)."""
        if m == 0:
            raise ValueError("dilation factor must be nonzero")
        if self._lattice is None:
            return SignedAtomicMeasure([(m * x + b, w) for x, w in self.items()])
        lat = self._lattice
        new = Lattice(m * lat.offset + b, abs(m) * lat.spacing)
        sgn = 1 if m > 0 else -1
        keys = np.fromiter(self._atoms, np.int64, len(self)) * sgn
        return SignedAtomicMeasure.from_indices(keys, np.fromiter(self._atoms.values(), float, len(self)), new)

    def dense(self) -> tuple[int, np.ndarray]:
        """``(start, weights)`` covering the index range of a lattice-tagged measure."""
        if self._lattice is None:
            raise ValueError("measure is not lattice-tagged")
        if not self._atoms:
            return 0, np.zeros(0)
        keys = np.fromiter(self._atoms, np.int64, len(self))
        lo, hi = int(keys.min()), int(keys.max())
        arr = np.zeros(hi - lo + 1)
        arr[keys - lo] = np.fromiter(self._atoms.values(), float, len(self))
        return lo, arr

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        if self._lattice is None:
            atoms = [[x, w] for x, w in self.items()]
        else:
            atoms = [[float(self._lattice.location(k)), self._atoms[k], int(k)] for k in self._sorted_keys()]
        return {"atoms": atoms, "lattice": None if self._lattice is None else self._lattice.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "SignedAtomicMeasure":
        lat = data.get("lattice")
        lattice = None if lat is None else Lattice(float(lat["offset"]), float(lat["spacing"]))
        atoms = data.get("atoms", [])
        if lattice is not None and atoms and all(len(a) >= 3 for a in atoms):
            return cls.from_indices([int(a[2]) for a in atoms], [a[1] for a in atoms], lattice)
        return cls([(a[0], a[1]) for a in atoms], lattice=lattice)

    def __repr__(self):
        body = ", ".join(f"{x:g}: {w:.6g}" for x, w in self.items()[:8])
        more = ", ..." if len(self) > 8 else ""
        tag = "" if self._lattice is None else f", lattice={self._lattice.offset:g}+{self._lattice.spacing:g}Z"
        return f"SignedAtomicMeasure({{{body}{more}}}{tag})"


@dataclass(frozen=True)
class MeasureDecomposition:
    positive: SignedAtomicMeasure
    negative: SignedAtomicMeasure
    total_variation: SignedAtomicMeasure


def hahn_jordan(zeta: SignedAtomicMeasure) -> MeasureDecomposition:
    """Split an atomic measure into its positive and negative parts, atom by atom."""
    lat = zeta.lattice
    pos = SignedAtomicMeasure.__new__(SignedAtomicMeasure)
    neg = SignedAtomicMeasure.__new__(SignedAtomicMeasure)
    tv = SignedAtomicMeasure.__new__(SignedAtomicMeasure)
    pos._atoms = {k: w for k, w in zeta._atoms.items() if w > 0}
    neg._atoms = {k: -w for k, w in zeta._atoms.items() if w < 0}
    tv._atoms = {k: abs(w) for k, w in zeta._atoms.items()}
    pos._lattice = neg._lattice = tv._lattice = lat
    return MeasureDecomposition(pos, neg, tv)


def _convolve_lattice(z1: SignedAtomicMeasure, z2: SignedAtomicMeasure, lattice: Lattice) -> SignedAtomicMeasure:
    n1, n2 = len(z1), len(z2)
    lo1, d1 = z1.dense()
    lo2, d2 = z2.dense()
    if d1.size + d2.size <= _DENSE_SLACK * n1 * n2 + 64:
        return SignedAtomicMeasure.from_dense(lo1 + lo2, np.convolve(d1, d2), lattice)
    k1 = np.fromiter(z1._atoms, np.int64, n1)
    k2 = np.fromiter(z2._atoms, np.int64, n2)
    w1 = np.fromiter(z1._atoms.values(), float, n1)
    w2 = np.fromiter(z2._atoms.values(), float, n2)
    return SignedAtomicMeasure.from_indices(np.add.outer(k1, k2).ravel(), np.multiply.outer(w1, w2).ravel(), lattice)


def convolve(z1: SignedAtomicMeasure, z2: SignedAtomicMeasure) -> SignedAtomicMeasure:
    """Convolution: atoms at pairwise sums of locations, weights multiplied."""
    if not z1 or not z2:
        lat = z1.lattice if z1.lattice == z2.lattice else None
        return SignedAtomicMeasure.zero(lat)
    a, b = z1.lattice, z2.lattice
    if a is not None and b is not None and math.isclose(a.spacing, b.spacing, rel_tol=1e-12):
        return _convolve_lattice(z1, z2, Lattice(a.offset + b.offset, a.spacing))
    locs = np.add.outer(z1.locations(), z2.locations()).ravel()
    ws = np.multiply.outer(z1.weights(), z2.weights()).ravel()
    out = SignedAtomicMeasure.__new__(SignedAtomicMeasure)
    out._atoms = _merge_float(locs, ws)
    out._lattice = None
    return out


def _unit(zeta: SignedAtomicMeasure) -> SignedAtomicMeasure:
    """The Dirac measure at 0, on the lattice of ``zeta`` when 0 lies on it."""
    lat = zeta.lattice
    if lat is not None:
        try:
            return SignedAtomicMeasure.from_indices([lat.index_of(0.0)], [1.0], lat)
        except ValueError:
            pass
    return SignedAtomicMeasure.dirac(0.0)


def convolve_power(zeta: SignedAtomicMeasure, m: int) -> SignedAtomicMeasure:
    """``zeta`` convolved with itself ``m`` times, by repeated squaring."""
    if m < 1:
        raise ValueError("convolution power must be at least 1")
    result = None
    base = zeta
    while m:
        if m & 1:
            result = base if result is None else convolve(result, base)
        m >>= 1
        if m:
            base = convolve(base, base)
    return result


class ExpSeries(NamedTuple):
    measure: SignedAtomicMeasure
    terms: int
    tail_bound: float


def exp_tail_bound(t: float, n: int) -> float:
    """Upper bound for ``sum_{k>n} t**k / k!`` (valid when ``n + 2 > t``)."""
    if t == 0:
        return 0.0
    if n + 2 <= t:
        return math.inf
    log_term = (n + 1) * math.log(t) - math.lgamma(n + 2)
    return math.exp(log_term) / (1.0 - t / (n + 2))


def exp_measure(zeta: SignedAtomicMeasure, tail_tol: float = 1e-15) -> ExpSeries:
    """Truncated exponential series ``sum_n zeta^{*n} / n!``.

    The number of terms is the smallest ``N`` whose remainder bound
    ``sum_{n>N} T^n/n!`` with ``T = |zeta|(R)`` is below ``tail_tol``.
    """
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")
    t = zeta.total_variation()
    n = 0
    while exp_tail_bound(t, n) >= tail_tol:
        n += 1
    acc = _unit(zeta)
    term = _unit(zeta)
    for k in range(1, n + 1):
        term = convolve(term, zeta) / k
        acc = acc + term
    return ExpSeries(acc, n, exp_tail_bound(t, n))


def fourier_eval(zeta: SignedAtomicMeasure, z):
    """``sum_x w_x exp(i z x)``; ``z`` may be a scalar or an array."""
    z_arr = np.asarray(z, dtype=float)
    if not zeta:
        out = np.zeros(z_arr.shape, dtype=complex)
    else:
        out = np.exp(1j * np.multiply.outer(z_arr, zeta.locations())) @ zeta.weights()
    return complex(out) if out.ndim == 0 else out


_BLOCK = 256
_CHUNK = 4096


def _expm1_i(theta: np.ndarray) -> np.ndarray:
    """``exp(i theta) - 1`` without cancellation for small ``theta``."""
    return -2.0 * np.sin(0.5 * theta) ** 2 + 1j * np.sin(theta)


def fourier_increment(zeta: SignedAtomicMeasure, z) -> np.ndarray:
    """``sum_x w_x (exp(i z x) - 1)`` for an array of frequencies ``z``.

    Lattice-tagged measures with a compact index range are evaluated in
    blocks ``x = s_b + h j``, using
    ``e^{i(a+b)} - 1 = A + B + AB`` with ``A = e^{ia} - 1``, ``B = e^{ib} - 1``,
    so only ``len(z) * (blocks + block size)`` sines are needed.
    """
    zf = np.asarray(z, dtype=float).ravel()
    out = np.zeros(zf.size, dtype=complex)
    if not zeta:
        return out
    lat = zeta.lattice
    if lat is not None and len(zeta) > _BLOCK:
        lo, d = zeta.dense()
        if d.size <= _DENSE_SLACK * len(zeta) + 64:
            nb = -(-d.size // _BLOCK)
            w = np.zeros(nb * _BLOCK)
            w[: d.size] = d
            w = w.reshape(nb, _BLOCK)
            e = _expm1_i(np.multiply.outer(zf, lat.spacing * np.arange(_BLOCK)))
            s = _expm1_i(np.multiply.outer(zf, lat.location(lo + _BLOCK * np.arange(nb))))
            ew = e @ w.T
            return (s * w.sum(axis=1) + (1.0 + s) * ew).sum(axis=1)
    x, w = zeta.locations(), zeta.weights()
    for i in range(0, x.size, _CHUNK):
        out += _expm1_i(np.multiply.outer(zf, x[i: i + _CHUNK])) @ w[i: i + _CHUNK]
    return out


def l1_distance(z1: SignedAtomicMeasure, z2: SignedAtomicMeasure) -> float:
    """Total variation norm of the difference."""
    return (z1 - z2).total_variation()


@dataclass(frozen=True)
class Region:
    """A finite union of intervals, or its complement.

    Each interval is ``(lo, hi, closed_lo, closed_hi)``; infinite endpoints
    are allowed.
    """

    intervals: tuple = ()
    complement: bool = False

    @classmethod
    def everything(cls) -> "Region":
        return cls((), True)

    @classmethod
    def empty(cls) -> "Region":
        return cls((), False)

    @classmethod
    def interval(cls, lo: float, hi: float, closed: tuple[bool, bool] = (True, True)) -> "Region":
        return cls(((lo, hi, closed[0], closed[1]),))

    @classmethod
    def point(cls, x: float) -> "Region":
        return cls.interval(x, x)

    @classmethod
    def nonzero(cls) -> "Region":
        return cls(((0.0, 0.0, True, True),), True)

    def inverted(self) -> "Region":
        return Region(self.intervals, not self.complement)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi, clo, chi in self.intervals:
            left = x >= lo if clo else x > lo
            right = x <= hi if chi else x < hi
            inside |= left & right
        return ~inside if self.complement else inside


def restrict(zeta: SignedAtomicMeasure, region: Region) -> SignedAtomicMeasure:
    """Keep only the atoms lying in ``region``."""
    keys = zeta._sorted_keys()
    if not keys:
        return zeta
    mask = region.contains(zeta.locations())
    out = SignedAtomicMeasure.__new__(SignedAtomicMeasure)
    out._atoms = {k: zeta._atoms[k] for k, keep in zip(keys, mask) if keep}
    out._lattice = zeta.lattice
    return out


@dataclass
class ComplexAtomicMeasure:
    """Complex weights on integer locations; only used as an intermediate."""

    atoms: dict = field(default_factory=dict)

    def __add__(self, other: "ComplexAtomicMeasure") -> "ComplexAtomicMeasure":
        out = dict(self.atoms)
        for k, w in other.atoms.items():
            out[k] = out.get(k, 0j) + w
        return ComplexAtomicMeasure({k: w for k, w in out.items() if w != 0})

    def max_imag(self) -> float:
        return max((abs(w.imag) for w in self.atoms.values()), default=0.0)

    def total_variation(self) -> float:
        return math.fsum(abs(w) for w in self.atoms.values())

    def fourier_eval(self, z):
        z_arr = np.asarray(z, dtype=float)
        if not self.atoms:
            return np.zeros(z_arr.shape, dtype=complex)
        keys = np.array(list(self.atoms), dtype=float)
        ws = np.array(list(self.atoms.values()), dtype=complex)
        return np.exp(1j * np.multiply.outer(z_arr, keys)) @ ws

    def real_part(self, imag_tol: float = 1e-9) -> SignedAtomicMeasure:
        """Real weights on ``Z``; raises if an imaginary part exceeds ``imag_tol``."""
        if self.max_imag() > imag_tol:
            raise ValueError(f"imaginary residue {self.max_imag():.3g} exceeds {imag_tol:g}")
        keys = list(self.atoms)
        return SignedAtomicMeasure.from_indices(keys, [self.atoms[k].real for k in keys], INTEGERS)
