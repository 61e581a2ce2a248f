"""Discrete vector-valued differential forms on a periodic cubic grid.

The flat 3-torus of period L is sampled at n^3 sites, x_i = i h with
h = L/n.  All form degrees are collocated at sites; the exterior
derivative uses forward differences with periodic wrap, which keeps
d(d(f)) at roundoff and makes every integral of an exact form telescope
to zero.  2-form slots are ordered (xy, xz, yz) and carry the single
sum-over-i<j convention, so for Lie-algebra-valued 1-forms
(a ^ a)_{ij} = [a_i, a_j].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SLOT_COUNT = (1, 3, 3, 1)
SLOTS2 = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class Grid:
    """Periodic cubic grid: n sites per axis over physical period length."""

    n: int
    length: float = 2.0 * np.pi

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("grid needs at least 4 sites per axis")
        if self.length <= 0:
            raise ValueError("period must be positive")

    @property
    def h(self):
        return self.length / self.n

    def axis_coords(self):
        return np.arange(self.n) * self.h

    def site_coords(self):
        """Array (n, n, n, 3) of site positions."""
        c = self.axis_coords()
        x, y, z = np.meshgrid(c, c, c, indexing="ij")
        return np.stack([x, y, z], axis=-1)


class LatticeField:
    """A degree-k form with value dimension v: data shape (n, n, n, slots, v).

    Data buffers are frozen after construction; operations build new fields.
    """

    __slots__ = ("grid", "degree", "data")

    def __init__(self, grid, degree, data, copy=False):
        data = np.asarray(data)
        if copy:
            data = data.copy()
        n = grid.n
        if degree not in (0, 1, 2, 3):
            raise ValueError("form degree must be 0..3")
        expected = (n, n, n, SLOT_COUNT[degree])
        if data.shape[:4] != expected:
            raise ValueError(f"data shape {data.shape} does not match {expected} + (v,)")
        if data.ndim != 5:
            raise ValueError("data must have shape (n, n, n, slots, v)")
        if not np.all(np.isfinite(data)):
            raise ValueError("field data contains NaN or Inf")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "data", data)
        if data.base is None and data.flags.owndata:
            data.flags.writeable = False

    def __setattr__(self, *a):
        raise AttributeError("LatticeField is immutable")

    @property
    def vdim(self):
        return self.data.shape[-1]

    @classmethod
    def zeros(cls, grid, degree, vdim, dtype=float):
        n = grid.n
        return cls(grid, degree, np.zeros((n, n, n, SLOT_COUNT[degree], vdim), dtype=dtype))

    @classmethod
    def from_slots(cls, grid, degree, slots):
        """Build from a list of per-slot arrays shaped (n, n, n, v)."""
        return cls(grid, degree, np.stack(slots, axis=3))

    def slot(self, index):
        return self.data[:, :, :, index, :]

    def map_values(self, fn):
        return LatticeField(self.grid, self.degree, fn(self.data))

    def norm2_density(self):
        """Pointwise squared norm, summed over slots and components."""
        return np.sum(self.data * self.data, axis=(3, 4))

    # small linear algebra of fields
    def __add__(self, other):
        self._compat(other)
        return LatticeField(self.grid, self.degree, self.data + other.data)

    def __sub__(self, other):
        self._compat(other)
        return LatticeField(self.grid, self.degree, self.data - other.data)

    def __mul__(self, scalar):
        return LatticeField(self.grid, self.degree, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return LatticeField(self.grid, self.degree, -self.data)

    def _compat(self, other):
        if self.grid != other.grid or self.degree != other.degree or self.vdim != other.vdim:
            raise ValueError("incompatible fields")


def forward_diff(arr, axis, h):
    return (np.roll(arr, -1, axis=axis) - arr) / h


def centered_diff(arr, axis, h):
    return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2.0 * h)


def d(f):
    """Forward-difference exterior derivative with periodic wrap."""
    h = f.grid.h
    if f.degree == 0:
        v = f.slot(0)
        return LatticeField.from_slots(f.grid, 1, [forward_diff(v, mu, h) for mu in range(3)])
    if f.degree == 1:
        slots = []
        for mu, nu in SLOTS2:
            slots.append(forward_diff(f.slot(nu), mu, h) - forward_diff(f.slot(mu), nu, h))
        return LatticeField.from_slots(f.grid, 2, slots)
    if f.degree == 2:
        w_xy, w_xz, w_yz = (f.slot(i) for i in range(3))
        out = forward_diff(w_yz, 0, h) - forward_diff(w_xz, 1, h) + forward_diff(w_xy, 2, h)
        return LatticeField.from_slots(f.grid, 3, [out])
    raise ValueError("cannot take d of a 3-form")


# bilinear products on value axes ------------------------------------------

def _prod_scalar(a, b):
    return a * b


def _prod_cross(a, b):
    return np.cross(a, b)


def _prod_dot(a, b):
    return np.sum(a * b, axis=-1, keepdims=True)


def _prod_quat(a, b):
    """Quaternion product; imaginary (v=3) inputs are embedded with w=0."""
    from .algebra import qembed, qmul

    if a.shape[-1] == 3:
        a = qembed(a)
    if b.shape[-1] == 3:
        b = qembed(b)
    return qmul(a, b)


_PRODUCTS = {
    "scalar": _prod_scalar,
    "cross": _prod_cross,
    "dot": _prod_dot,
    "quat": _prod_quat,
    "bracket": lambda a, b: 2.0 * np.cross(a, b),  # su2 coefficient bracket
}


def wedge(alpha, beta, product):
    """Wedge product with the given bilinear product on values.

    The i<j slot of a 1-wedge-1 is p(a_i, b_j) - p(a_j, b_i); mixed degrees
    expand dx-monomials into the ordered basis with the usual signs.
    """
    if alpha.grid != beta.grid:
        raise ValueError("grids differ")
    p = _PRODUCTS[product] if isinstance(product, str) else product
    ka, kb = alpha.degree, beta.degree
    if ka + kb > 3:
        raise ValueError("wedge degree exceeds 3")
    g = alpha.grid
    if ka == 0 or kb == 0:
        scal, other, flip = (alpha, beta, False) if ka == 0 else (beta, alpha, True)
        s = scal.slot(0)
        slots = []
        for idx in range(SLOT_COUNT[other.degree]):
            o = other.slot(idx)
            slots.append(p(o, s) if flip else p(s, o))
        return LatticeField.from_slots(g, other.degree, slots)
    if (ka, kb) == (1, 1):
        slots = []
        for mu, nu in SLOTS2:
            slots.append(p(alpha.slot(mu), beta.slot(nu)) - p(alpha.slot(nu), beta.slot(mu)))
        return LatticeField.from_slots(g, 2, slots)
    if (ka, kb) == (1, 2):
        out = (p(alpha.slot(0), beta.slot(2))
               - p(alpha.slot(1), beta.slot(1))
               + p(alpha.slot(2), beta.slot(0)))
        return LatticeField.from_slots(g, 3, [out])
    if (ka, kb) == (2, 1):
        out = (p(alpha.slot(2), beta.slot(0))
               - p(alpha.slot(1), beta.slot(1))
               + p(alpha.slot(0), beta.slot(2)))
        return LatticeField.from_slots(g, 3, [out])
    raise ValueError(f"unsupported wedge degrees ({ka}, {kb})")


def l2_inner(alpha, beta):
    """Discrete L2 pairing: sum over sites, slots, components times h^3."""
    if alpha.grid != beta.grid or alpha.data.shape != beta.data.shape:
        raise ValueError("shape mismatch in l2_inner")
    return float(np.sum(alpha.data * beta.data) * alpha.grid.h ** 3)


def l2_norm(alpha):
    return float(np.sqrt(l2_inner(alpha, alpha)))


def integrate_3form(omega):
    """Integral over the torus; returns a scalar for v=1, else a vector."""
    if omega.degree != 3:
        raise ValueError("integrate_3form needs a 3-form")
    total = np.sum(omega.data, axis=(0, 1, 2, 3)) * omega.grid.h ** 3
    if total.shape == (1,):
        return float(total[0])
    return total
