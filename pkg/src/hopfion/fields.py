"""Group- and coset-valued lattice maps, potentials and charged ansatze.

CP1-valued maps store unit imaginary quaternions per site; the group SU2
acts on them by conjugation.  Lifts store unit quaternions (or unitary
matrices for matrix pairs).  Potentials extracted from lifts use the
principal logarithm of link variables, which lands exactly in the Lie
algebra and keeps plaquette holonomies of pure gauges at the identity.
"""

from __future__ import annotations

import numpy as np

from . import algebra as alg
from .lattice import Grid, LatticeField, SLOTS2, centered_diff

def _renorm_quat(values):
    return values / np.linalg.norm(values, axis=-1, keepdims=True)


class MapField:
    """A map from the torus into the coset space of a pair.

    CP1 values: (n, n, n, 3) unit imaginary quaternions.  Group targets:
    (n, n, n, 4) unit quaternions.  Matrix pairs store coset representatives
    (n, n, n, N, N).  Values are renormalized on construction and frozen.
    """

    __slots__ = ("grid", "pair", "values")

    def __init__(self, grid, pair, values, renormalize=True):
        values = np.asarray(values)
        if pair.group_kind == "quaternion":
            if renormalize:
                values = _renorm_quat(values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "pair", pair)
        object.__setattr__(self, "values", values)
        if values.flags.owndata:
            values.flags.writeable = False

    def __setattr__(self, *a):
        raise AttributeError("MapField is immutable")

    @property
    def is_cp1(self):
        return self.pair.group_kind == "quaternion" and self.values.shape[-1] == 3

    @property
    def is_group(self):
        return self.pair.dim_h == 0

    def with_values(self, values, renormalize=True):
        return MapField(self.grid, self.pair, values, renormalize=renormalize)


class LiftField:
    """A map into the group G, stored per site."""

    __slots__ = ("grid", "pair", "values")

    def __init__(self, grid, pair, values, renormalize=True):
        values = np.asarray(values)
        if pair.group_kind == "quaternion" and renormalize:
            values = _renorm_quat(values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "pair", pair)
        object.__setattr__(self, "values", values)
        if values.flags.owndata:
            values.flags.writeable = False

    def __setattr__(self, *a):
        raise AttributeError("LiftField is immutable")

    def inverse_values(self):
        if self.pair.group_kind == "quaternion":
            return alg.qconj(self.values)
        return np.swapaxes(self.values, -1, -2).conj()


class PotentialField:
    """A g-valued 1-form with a cached isotropy split against a reference map."""

    def __init__(self, a, phi=None, pair=None):
        if a.degree != 1:
            raise ValueError("potential must be a 1-form")
        self.a = a
        self.phi = phi
        self.pair = pair if pair is not None else (phi.pair if phi is not None else alg.su2_u1())
        self._split = None

    def split(self):
        """(a_par, a_perp) as 1-forms, pointwise in h_phi and its complement."""
        if self._split is None:
            self._split = split_potential(self.a, self.phi, self.pair)
        return self._split

    @property
    def grid(self):
        return self.a.grid


def split_potential(a, phi, pair):
    if pair.dim_h == 0:
        zero = LatticeField.zeros(a.grid, 1, a.vdim)
        return zero, a
    if phi is None:
        raise ValueError("isotropy split needs a reference map")
    if phi.is_cp1:
        ref = phi.values[:, :, :, None, :]  # broadcast over slots
        par = np.sum(a.data * ref, axis=-1, keepdims=True) * ref
        return (LatticeField(a.grid, 1, par),
                LatticeField(a.grid, 1, a.data - par))
    # representative-valued reference: project through Ad(g)
    g = phi.values
    ginv = np.swapaxes(g, -1, -2).conj() if phi.pair.group_kind == "matrix" else alg.qconj(g)
    par_slots, perp_slots = [], []
    for mu in range(3):
        down = pair.ad(ginv, a.slot(mu))
        par_slots.append(pair.ad(g, pair.proj_h(down)))
        perp_slots.append(pair.ad(g, pair.proj_perp(down)))
    return (LatticeField.from_slots(a.grid, 1, par_slots),
            LatticeField.from_slots(a.grid, 1, perp_slots))


def constant_map(grid, pair=None, point=(1.0, 0.0, 0.0)):
    """The constant reference map; defaults to phi = i on CP1."""
    pair = pair if pair is not None else alg.su2_u1()
    vals = np.broadcast_to(np.asarray(point, dtype=float), (grid.n,) * 3 + (len(point),)).copy()
    return MapField(grid, pair, vals)


def links(u, axis):
    """Link variable u(x)^-1 u(x + e_axis)."""
    if u.pair.group_kind == "quaternion":
        return alg.qmul(alg.qconj(u.values), np.roll(u.values, -1, axis=axis))
    return u.inverse_values() @ np.roll(u.values, -1, axis=axis)


def pure_gauge_potential(u, phi=None):
    """a = u^-1 du from principal logs of link variables, exactly g-valued."""
    h = u.grid.h
    slots = []
    for mu in range(3):
        ell = links(u, mu)
        if u.pair.group_kind == "quaternion":
            slots.append(alg.qlog(ell) / h)
        else:
            slots.append(u.pair.coeffs_of(alg.matrix_log_unitary(ell)) / h)
    a = LatticeField.from_slots(u.grid, 1, slots)
    ref = phi if phi is not None else (
        constant_map(u.grid) if u.pair.name == "su2_u1" else None)
    return PotentialField(a, ref, u.pair)


def plaquette_defect(u):
    """Max distance of any plaquette holonomy from the identity."""
    worst = 0.0
    for mu, nu in SLOTS2:
        l_mu = links(u, mu)
        l_nu = links(u, nu)
        if u.pair.group_kind == "quaternion":
            p = alg.qmul(alg.qmul(l_mu, np.roll(l_nu, -1, axis=mu)),
                         alg.qconj(alg.qmul(l_nu, np.roll(l_mu, -1, axis=nu))))
            ident = np.zeros_like(p)
            ident[..., 0] = 1.0
            worst = max(worst, float(np.max(np.linalg.norm(p - ident, axis=-1))))
        else:
            p = (l_mu @ np.roll(l_nu, -1, axis=mu)
                 @ np.swapaxes(l_nu @ np.roll(l_mu, -1, axis=nu), -1, -2).conj())
            eye = np.eye(p.shape[-1])
            worst = max(worst, float(np.max(np.linalg.norm(p - eye, axis=(-2, -1)))))
    return worst


def act(u, phi):
    """Action of a lift on a map: conjugation on CP1, left product on groups."""
    if u.grid != phi.grid:
        raise ValueError("grids differ")
    if phi.is_cp1:
        return phi.with_values(alg.qrotate(u.values, phi.values))
    if phi.pair.group_kind == "quaternion":
        return phi.with_values(alg.qmul(u.values, phi.values))
    return phi.with_values(u.values @ phi.values, renormalize=False)


def map_tangents(psi):
    """Centered-difference tangents of a CP1 map, one per axis, unprojected."""
    h = psi.grid.h
    return [centered_diff(psi.values, mu, h) for mu in range(3)]


def tangency_residual(psi):
    """Smoothness diagnostic: max |psi . D_mu psi| over sites and axes."""
    worst = 0.0
    for v in map_tangents(psi):
        worst = max(worst, float(np.max(np.abs(np.sum(v * psi.values, axis=-1)))))
    return worst


def pullback_coisotropy(psi):
    """psi^* omega-perp as a g-valued 1-form.

    CP1: the form on the centered-difference tangent projected to the
    sphere; the cross product with the unit base point performs both the
    projection and the quarter-turn, slot = psi x D_mu psi / 2.  Group
    targets: right-translated projected tangent.  Matrix cosets: forward
    link logs pushed through Ad of the representative.
    """
    g = psi.grid
    if psi.is_cp1:
        slots = [0.5 * np.cross(psi.values, v) for v in map_tangents(psi)]
        return LatticeField.from_slots(g, 1, slots)
    if psi.pair.group_kind == "quaternion":
        # omega-perp = dg g^-1 for trivial H, on projected tangents
        slots = []
        for mu in range(3):
            v = centered_diff(psi.values, mu, g.h)
            v = v - np.sum(v * psi.values, axis=-1, keepdims=True) * psi.values
            slots.append(alg.qim(alg.qmul(v, alg.qconj(psi.values))))
        return LatticeField.from_slots(g, 1, slots)
    pair = psi.pair
    u = LiftField(g, pair, psi.values, renormalize=False)
    slots = []
    for mu in range(3):
        ell = links(u, mu)
        omega_down = pair.proj_perp(pair.coeffs_of(alg.matrix_log_unitary(ell)) / g.h)
        slots.append(pair.ad(psi.values, omega_down))
    return LatticeField.from_slots(g, 1, slots)


# ---------------------------------------------------------------------------
# ansatze
# ---------------------------------------------------------------------------

def smoothstep(t):
    """Quintic step: 0 -> 1 on [0, 1] with two vanishing derivatives at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def _suspension_lift(grid, charge):
    """Radial suspension of a degree-`charge` sphere map, supported in a ball.

    u = cos f + sin f m, with the profile f falling from pi at the center
    to 0 at radius L/3 (quintic step, so link angles stay below the log
    cut at moderate n) and m the radial direction with its azimuth wound
    `charge` times about the x-axis.  That axis choice sends the winding
    axis to the vacuum value i of psi = u i u^-1, so the preimages of
    generic regular values stay clear of the azimuthal degeneracy.  The
    resulting group map has degree = charge.
    """
    L = grid.length
    radius = L / 3.0
    x = grid.site_coords() - 0.5 * L
    r = np.linalg.norm(x, axis=-1)
    f = np.pi * smoothstep(1.0 - r / radius)
    inside = r > 1e-12 * L
    rho = np.sqrt(x[..., 1] ** 2 + x[..., 2] ** 2)
    theta = np.arctan2(rho, x[..., 0])          # polar angle from +x
    phi_az = np.arctan2(x[..., 2], x[..., 1])   # azimuth in the (y, z) plane
    m = np.zeros_like(x)
    m[..., 0] = np.cos(theta)
    m[..., 1] = np.sin(theta) * np.cos(charge * phi_az)
    m[..., 2] = np.sin(theta) * np.sin(charge * phi_az)
    m[~inside] = (1.0, 0.0, 0.0)
    vals = np.zeros(x.shape[:-1] + (4,))
    vals[..., 0] = np.cos(f)
    vals[..., 1:] = np.sin(f)[..., None] * m
    return LiftField(grid, alg.su2_u1(), vals)


def make_ansatz(kind, grid, charge=0):
    """Charged initial data: returns (psi, u) with psi = u . i . u^-1.

    Kinds: 'constant', 'hopf' (Hopf charge = `charge`), 'ball_degree'
    (lift degree = `charge`, same suspension generator) and 'great_circle'
    (an equatorial wrap along x with its closed periodic lift).
    """
    pair = alg.su2_u1()
    if kind == "constant" or (kind == "hopf" and charge == 0):
        u = LiftField(grid, pair, pair.identity_element((grid.n,) * 3))
        return constant_map(grid, pair), u
    if kind in ("hopf", "ball_degree"):
        u = _suspension_lift(grid, int(charge))
        return act(u, constant_map(grid, pair)), u
    if kind == "great_circle":
        x1 = grid.site_coords()[..., 0]
        alpha = np.pi * x1 / grid.length
        # closed periodic lift: exp(k alpha) exp(i alpha)
        u_vals = alg.qmul(
            np.stack([np.cos(alpha), np.zeros_like(alpha), np.zeros_like(alpha),
                      np.sin(alpha)], axis=-1),
            np.stack([np.cos(alpha), np.sin(alpha), np.zeros_like(alpha),
                      np.zeros_like(alpha)], axis=-1),
        )
        u = LiftField(grid, pair, u_vals)
        psi_vals = np.zeros(x1.shape + (3,))
        psi_vals[..., 0] = np.cos(2.0 * alpha)
        psi_vals[..., 1] = np.sin(2.0 * alpha)
        psi = MapField(grid, pair, psi_vals)
        return psi, u
    raise ValueError(f"unknown ansatz kind '{kind}'")
