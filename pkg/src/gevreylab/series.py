"""Truncated multivariate power series in x and t-indexed families of them.

An :class:`XSeries` stores plain coefficients c_idx of x^idx in a sparse dict
and carries a total-degree cap: indices above the cap are unknown, not zero.
``cap=None`` marks an exact polynomial (nothing truncated).

A :class:`TSeries` holds u_0(x), ..., u_J(x) and stands for
sum_j u_j(x) t^j / m_0(j).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._arith import EXACT, fmt_scalar, is_exact, normalize, parse_scalar, to_mpf
from .moments import MomentSequence


def _min_cap(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _coerce_like(value, sample):
    """Bring a moment value into the scalar domain of ``sample``."""
    if sample is None or is_exact(sample):
        return value
    return to_mpf(value)


class XSeries:
    """Immutable truncated power series in N variables."""

    __slots__ = ("dim", "cap", "coeffs")

    def __init__(self, dim: int, cap: int | None, coeffs: Mapping[tuple, object] | None = None):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        if cap is not None and cap < 0:
            raise ValueError("cap must be >= 0")
        clean = {}
        for idx, c in (coeffs or {}).items():
            idx = tuple(int(k) for k in idx)
            if len(idx) != dim or min(idx) < 0:
                raise ValueError(f"bad multi-index {idx} for dimension {dim}")
            if cap is not None and sum(idx) > cap:
                continue
            if c != 0:
                clean[idx] = normalize(c)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "cap", cap)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):
        raise AttributeError("XSeries is immutable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, cap: int | None = None) -> "XSeries":
        return cls(dim, cap)

    @classmethod
    def constant(cls, value, dim: int, cap: int | None = None) -> "XSeries":
        return cls(dim, cap, {(0,) * dim: value})

    @classmethod
    def monomial(cls, idx: Sequence[int], value=1, cap: int | None = None) -> "XSeries":
        return cls(len(idx), cap, {tuple(idx): value})

    @classmethod
    def geometric(cls, dim: int, cap: int) -> "XSeries":
        """prod_d 1/(1 - x_d) truncated at total degree ``cap``."""
        return cls(dim, cap, {idx: 1 for idx in multi_indices(dim, cap)})

    @classmethod
    def from_dense(cls, values: Sequence, cap: int | None = None) -> "XSeries":
        return cls(1, cap, {(k,): v for k, v in enumerate(values)})

    # -- inspection ------------------------------------------------------------

    def __getitem__(self, idx):
        if isinstance(idx, int):
            idx = (idx,)
        return self.coeffs.get(tuple(idx), 0)

    def __iter__(self):
        return iter(sorted(self.coeffs.items()))

    def __len__(self):
        return len(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, XSeries):
            return self.dim == other.dim and self.cap == other.cap and self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.dim, self.cap, frozenset(self.coeffs.items())))

    def __repr__(self):
        terms = " + ".join(f"{fmt_scalar(c)}*x^{list(i)}" for i, c in self) or "0"
        return f"XSeries({terms}, cap={self.cap})"

    @property
    def degree(self) -> int:
        """Total degree of the stored part (-1 for the zero series)."""
        return max((sum(i) for i in self.coeffs), default=-1)

    def truncate(self, cap: int | None) -> "XSeries":
        return XSeries(self.dim, _min_cap(self.cap, cap), self.coeffs)

    def with_cap(self, cap: int | None) -> "XSeries":
        return XSeries(self.dim, cap, self.coeffs)

    def dense(self) -> list:
        if self.dim != 1:
            raise ValueError("dense view only for N=1")
        out = [0] * (self.degree + 1)
        for (k,), c in self.coeffs.items():
            out[k] = c
        return out

    def evaluate(self, point: Sequence):
        total = 0
        for idx, c in self.coeffs.items():
            term = c
            for xd, k in zip(point, idx):
                term = term * xd ** k
            total = total + term
        return total

    # -- arithmetic ------------------------------------------------------------

    def _check_dim(self, other: "XSeries"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, XSeries):
            other = XSeries.constant(other, self.dim)
        self._check_dim(other)
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = out.get(idx, 0) + c
        return XSeries(self.dim, _min_cap(self.cap, other.cap), out)

    __radd__ = __add__

    def __neg__(self):
        return XSeries(self.dim, self.cap, {i: -c for i, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor) -> "XSeries":
        if factor == 0:
            return XSeries(self.dim, self.cap)
        return XSeries(self.dim, self.cap, {i: c * factor for i, c in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, XSeries):
            return self.scale(other)
        self._check_dim(other)
        cap = _min_cap(self.cap, other.cap)
        if not self.coeffs or not other.coeffs:
            return XSeries(self.dim, cap)
        if self.dim == 1:
            a = np.array(self.dense(), dtype=object)
            b = np.array(other.dense(), dtype=object)
            if cap is not None:
                a, b = a[: cap + 1], b[: cap + 1]
            prod = np.convolve(a, b)
            if cap is not None:
                prod = prod[: cap + 1]
            return XSeries(1, cap, {(k,): c for k, c in enumerate(prod.tolist())})
        out: dict = {}
        for ia, ca in self.coeffs.items():
            da = sum(ia)
            for ib, cb in other.coeffs.items():
                if cap is not None and da + sum(ib) > cap:
                    continue
                idx = tuple(x + y for x, y in zip(ia, ib))
                out[idx] = out.get(idx, 0) + ca * cb
        return XSeries(self.dim, cap, out)

    def __rmul__(self, other):
        return self.scale(other)

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> list:
        return [{"idx": list(i), "c": fmt_scalar(c)} for i, c in self]

    @classmethod
    def from_json(cls, doc: list, dim: int, cap: int | None = None, mode: str = EXACT) -> "XSeries":
        return cls(dim, cap, {tuple(e["idx"]): parse_scalar(e["c"], mode) for e in doc})


def multi_indices(dim: int, max_degree: int) -> Iterable[tuple]:
    """All multi-indices of length ``dim`` with total degree <= ``max_degree``."""
    if dim == 1:
        for k in range(max_degree + 1):
            yield (k,)
        return
    for k in range(max_degree + 1):
        for rest in multi_indices(dim - 1, max_degree - k):
            yield (k,) + rest


def moment_dx(f: XSeries, axis: int, m: MomentSequence) -> XSeries:
    """Moment derivative along ``axis`` (0-based): c'_k = c_{k+1} m(k+1)/m(k)."""
    if not 0 <= axis < f.dim:
        raise ValueError(f"axis {axis} out of range for dimension {f.dim}")
    if f.cap is not None and f.cap < 1:
        raise ValueError("degree cap exhausted: cannot differentiate a cap-0 series")
    out = {}
    for idx, c in f.coeffs.items():
        k = idx[axis]
        if k == 0:
            continue
        new = idx[:axis] + (k - 1,) + idx[axis + 1:]
        out[new] = c * _coerce_like(m.ratio(k - 1), c)
    return XSeries(f.dim, None if f.cap is None else f.cap - 1, out)


def moment_dx_multi(f: XSeries, q: Sequence[int], moments: Sequence[MomentSequence]) -> XSeries:
    """Apply prod_d (moment d/dx_d)^{q_d}; ``moments`` holds m_1..m_N."""
    for axis, times in enumerate(q):
        for _ in range(times):
            f = moment_dx(f, axis, moments[axis])
    return f


def sup_majorant(f: XSeries, rho) -> object:
    """sum |c_idx| rho^{|idx|}: an upper bound of sup |f| on the closed rho-polydisc."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if any(not is_exact(c) for c in f.coeffs.values()):
        rho = to_mpf(rho)
    return sum((abs(c) * rho ** sum(i) for i, c in f.coeffs.items()), 0)


@dataclass(frozen=True)
class TSeries:
    """u_0(x), ..., u_J(x) representing sum_j u_j(x) t^j / m0(j)."""

    moment0: MomentSequence
    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        entries = tuple(self.entries)
        if entries and len({e.dim for e in entries}) != 1:
            raise ValueError("all entries must share the dimension")
        object.__setattr__(self, "entries", entries)

    @property
    def order(self) -> int:
        return len(self.entries) - 1

    @property
    def dim(self) -> int:
        return self.entries[0].dim

    def __getitem__(self, j: int) -> XSeries:
        return self.entries[j]

    def __len__(self):
        return len(self.entries)

    def plain(self, j: int):
        """u_j / m0(j): the coefficient of t^j in the ordinary basis."""
        return self.entries[j].scale(_inverse(self.moment0.value(j)))

    def moment_dt(self, i: int) -> "TSeries":
        if i < 0:
            raise ValueError("i must be nonnegative")
        if i > self.order:
            raise ValueError(f"cannot shift by {i}: series only has entries up to j={self.order}")
        return TSeries(self.moment0, self.entries[i:])

    def moment_dx(self, axis: int, m: MomentSequence) -> "TSeries":
        return TSeries(self.moment0, tuple(moment_dx(e, axis, m) for e in self.entries))

    def scale(self, factor) -> "TSeries":
        return TSeries(self.moment0, tuple(e.scale(factor) for e in self.entries))

    def to_json(self) -> dict:
        return {
            "m0": self.moment0.to_json(),
            "entries": [{"cap": e.cap, "coeffs": e.to_json()} for e in self.entries],
        }

    @classmethod
    def from_json(cls, doc: dict, dim: int, mode: str = EXACT) -> "TSeries":
        m0 = MomentSequence.from_json(doc["m0"])
        entries = tuple(XSeries.from_json(e["coeffs"], dim, e["cap"], mode) for e in doc["entries"])
        return cls(m0, entries)


def _inverse(x):
    if is_exact(x):
        return normalize(Fraction(1) / x)
    return 1 / to_mpf(x)
