"""Faddeev-Skyrme energy densities, totals and the exact discrete gradient.

The canonical density is e = |w|^2 / 2 + |w ^ w|^2 / 4 with w the pullback
of the coisotropy form, evaluated on centered-difference tangents.  On CP1
this makes the model metric the Riemann-quotient one: tangent lengths are
half their Euclidean length on the embedded unit sphere, and the quartic
slot values are commutators [w_mu, w_nu].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from . import fields as fl
from .lattice import LatticeField, SLOTS2, centered_diff, wedge

# Site-wise ratio of the commutator-wedge Skyrme density to the literal
# cross-product form on the half-scaled differential: |[x, y]| = 2 |x cross y|
# on su2, squared.  Frozen as a regression value.
CROSS_VARIANT_SKYRME_RATIO = 4.0


@dataclass
class EnergyReport:
    dirichlet: float
    skyrme: float
    total: float
    density: LatticeField
    model_tag: str

    def as_dict(self):
        return {
            "model": self.model_tag,
            "dirichlet": self.dirichlet,
            "skyrme": self.skyrme,
            "total": self.total,
        }

    def __str__(self):
        return (f"[{self.model_tag}] dirichlet = {self.dirichlet:.12g}  "
                f"skyrme = {self.skyrme:.12g}  total = {self.total:.12g}")


def comm_wedge(omega, pair):
    """(w ^ w) under the matrix product: slot (mu, nu) equals [w_mu, w_nu]."""
    # antisymmetry doubles the single product: slot = 2 p(w_mu, w_nu)
    if pair.group_kind == "quaternion":
        return wedge(omega, omega, "cross")
    return wedge(omega, omega, lambda a, b: 0.5 * pair.bracket(a, b))


def isotropy_project_2form(W, psi):
    """Slotwise projection onto the isotropy subalgebra along the map."""
    pair = psi.pair
    if pair.dim_h == 0:
        return LatticeField.zeros(W.grid, W.degree, W.vdim)
    if psi.is_cp1:
        ref = psi.values[:, :, :, None, :]
        par = np.sum(W.data * ref, axis=-1, keepdims=True) * ref
        return LatticeField(W.grid, W.degree, par)
    g = psi.values
    ginv = np.swapaxes(g, -1, -2).conj()
    slots = []
    for idx in range(W.data.shape[3]):
        down = pair.ad(ginv, W.slot(idx))
        slots.append(pair.ad(g, pair.proj_h(down)))
    return LatticeField.from_slots(W.grid, W.degree, slots)


def _report(grid, e2, e4, tag, scale_dirichlet, scale_skyrme):
    h3 = grid.h ** 3
    e2 = scale_dirichlet * e2
    e4 = scale_skyrme * e4
    dirichlet = float(np.sum(e2) * h3)
    skyrme = float(np.sum(e4) * h3)
    density = LatticeField(grid, 0, (e2 + e4)[..., None, None])
    return EnergyReport(dirichlet, skyrme, dirichlet + skyrme, density, tag)


def energy_map(psi, variant="coisotropy", scale_dirichlet=1.0, scale_skyrme=1.0):
    """Energy of a coset-valued map.

    variant 'coisotropy' is the canonical form for every pair;
    'cross_product' is the CP1-only vector-algebra path kept as an oracle
    (its Skyrme density is the coisotropy one divided by
    CROSS_VARIANT_SKYRME_RATIO); 'isotropic_skyrme' projects the quartic
    slots onto the isotropy subalgebra before taking norms.
    """
    grid = psi.grid
    if variant == "cross_product":
        if not psi.is_cp1:
            raise ValueError("cross_product variant is defined for the CP1 pair only")
        halves = []
        for v in fl.map_tangents(psi):
            vt = v - np.sum(v * psi.values, axis=-1, keepdims=True) * psi.values
            halves.append(0.5 * vt)
        e2 = 0.5 * sum(np.sum(hm * hm, axis=-1) for hm in halves)
        e4 = np.zeros_like(e2)
        for mu, nu in SLOTS2:
            c = np.cross(halves[mu], halves[nu])
            e4 = e4 + np.sum(c * c, axis=-1)
        e4 = 0.25 * e4
        return _report(grid, e2, e4, "map/cross_product", scale_dirichlet, scale_skyrme)

    omega = fl.pullback_coisotropy(psi)
    e2 = 0.5 * omega.norm2_density()
    W = comm_wedge(omega, psi.pair)
    if variant == "isotropic_skyrme":
        W = isotropy_project_2form(W, psi)
        tag = "map/isotropic_skyrme"
    elif variant == "coisotropy":
        tag = "map/coisotropy"
    else:
        raise ValueError(f"unknown energy variant '{variant}'")
    e4 = 0.25 * W.norm2_density()
    return _report(grid, e2, e4, tag, scale_dirichlet, scale_skyrme)


def covariant_potential(a, phi=None):
    """D_phi a = a_perp + phi^* omega-perp as a 1-form."""
    phi = phi if phi is not None else a.phi
    _, aperp = a.split()
    if phi is None:
        return aperp
    return aperp + fl.pullback_coisotropy(phi)


def energy_potential(a, phi=None, scale_dirichlet=1.0, scale_skyrme=1.0):
    """Energy of a potential relative to the reference map: E_phi(a)."""
    phi = phi if phi is not None else a.phi
    if phi is not None and phi.grid != a.grid:
        raise ValueError("potential and reference map live on different grids")
    D = covariant_potential(a, phi)
    e2 = 0.5 * D.norm2_density()
    W = comm_wedge(D, a.pair)
    e4 = 0.25 * W.norm2_density()
    return _report(a.grid, e2, e4, "potential", scale_dirichlet, scale_skyrme)


def descent_energy(psi, scale_dirichlet=1.0, scale_skyrme=1.0, split=False):
    """The relaxation objective: a topology-protecting discretization.

    Same continuum functional as energy_map, realized with the chordal
    nearest-neighbor Dirichlet term and the quartic term built from signed
    spherical plaquette areas (the quantized flux that also measures the
    charge).  Centered differences admit lattice null modes (checkerboard
    and antipodal-flip patterns cost nothing) through which descent can
    drain topology; here any lattice-scale topology change pays the full
    quartic price of a wrapped plaquette, of order 1/h.
    """
    if not psi.is_cp1:
        raise ValueError("the descent objective is implemented for the CP1 target")
    h = psi.grid.h
    p = psi.values
    e2 = np.zeros(p.shape[:-1])
    for mu in range(3):
        delta = np.roll(p, -1, axis=mu) - p
        e2 += np.sum(delta * delta, axis=-1)
    e4 = np.zeros_like(e2)
    for mu, nu in SLOTS2:
        p10 = np.roll(p, -1, axis=mu)
        p01 = np.roll(p, -1, axis=nu)
        p11 = np.roll(p10, -1, axis=nu)
        area = (alg.spherical_triangle_area(p, p10, p11)
                + alg.spherical_triangle_area(p, p11, p01))
        e4 += area * area
    dirichlet = scale_dirichlet * float(np.sum(e2)) * h / 8.0
    skyrme = scale_skyrme * float(np.sum(e4)) / (16.0 * h)
    if split:
        return dirichlet, skyrme
    return dirichlet + skyrme


def descent_gradient(psi, scale_dirichlet=1.0, scale_skyrme=1.0):
    """Exact tangent gradient of descent_energy with respect to site values."""
    if not psi.is_cp1:
        raise ValueError("the descent objective is implemented for the CP1 target")
    h = psi.grid.h
    p = psi.values
    grad = np.zeros_like(p)
    for mu in range(3):
        grad += (scale_dirichlet / 4.0) * h * (
            2.0 * p - np.roll(p, -1, axis=mu) - np.roll(p, 1, axis=mu))
    for mu, nu in SLOTS2:
        p10 = np.roll(p, -1, axis=mu)
        p01 = np.roll(p, -1, axis=nu)
        p11 = np.roll(p10, -1, axis=nu)
        a1, g1a, g1b, g1c = alg.spherical_triangle_area(p, p10, p11, with_grads=True)
        a2, g2a, g2b, g2c = alg.spherical_triangle_area(p, p11, p01, with_grads=True)
        w = (scale_skyrme / (8.0 * h)) * (a1 + a2)[..., None]
        grad += w * (g1a + g2a)
        grad += np.roll(w * g1b, 1, axis=mu)
        grad += np.roll(np.roll(w * (g1c + g2b), 1, axis=mu), 1, axis=nu)
        grad += np.roll(w * g2c, 1, axis=nu)
    grad -= np.sum(grad * p, axis=-1, keepdims=True) * p
    return grad


def energy_gradient(psi, scale_dirichlet=1.0, scale_skyrme=1.0):
    """Exact gradient of the discretized coisotropy energy on a CP1 map.

    Returns per-site vectors tangent to the sphere, shape (n, n, n, 3).
    The energy as a function of raw site values is
      sum_x h^3 [ c2/8 sum_mu |psi x v_mu|^2 + c4/16 sum_{mu<nu} s_mn^2 ]
    with v_mu the centered differences and s_mn = psi . (v_mu x v_nu);
    the chain rule contributions through the neighbors enter as the
    (negative) centered difference of d(density)/d(v_mu).
    """
    if not psi.is_cp1:
        raise ValueError("energy_gradient is implemented for the CP1 target")
    grid = psi.grid
    h = grid.h
    p = psi.values
    v = [centered_diff(p, mu, h) for mu in range(3)]
    c2 = scale_dirichlet
    c4 = scale_skyrme

    grad = np.zeros_like(p)
    dEdv = [np.zeros_like(p) for _ in range(3)]

    for mu in range(3):
        pv = np.sum(p * v[mu], axis=-1, keepdims=True)
        vv = np.sum(v[mu] * v[mu], axis=-1, keepdims=True)
        grad += (c2 / 4.0) * (vv * p - pv * v[mu])
        dEdv[mu] += (c2 / 4.0) * (v[mu] - pv * p)

    for mu, nu in SLOTS2:
        cvv = np.cross(v[mu], v[nu])
        s = np.sum(p * cvv, axis=-1, keepdims=True)
        grad += (c4 / 8.0) * s * cvv
        dEdv[mu] += (c4 / 8.0) * s * np.cross(v[nu], p)
        dEdv[nu] += (c4 / 8.0) * s * np.cross(p, v[mu])

    for mu in range(3):
        grad -= centered_diff(dEdv[mu], mu, h)

    grad *= h ** 3
    grad -= np.sum(grad * p, axis=-1, keepdims=True) * p
    return grad
