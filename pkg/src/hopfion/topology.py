"""Hopf charges by three independent routes, plus sector bookkeeping.

Chern-Simons route: c * integral of tr(a ^ a ^ a) assembled from the
four-term isotropy split of the integrand; the normalization constant for
SU(N) in the defining representation is frozen from the degree-1
calibration run, c = -1 / (24 pi^2) with this package's orientation
conventions.

Whitehead route: the pullback of the normalized area form is realized as
the signed spherical area swept by each plaquette (quantized fluxes, so
the form is exactly closed cell by cell), dA = F is solved spectrally with
the exact symbol of the forward-difference complex, and the charge is the
integral of A ^ F.

Linking route: preimage polylines of two regular values are extracted by
marching through lattice cells and their Gauss linking number is counted
from signed crossings in a generic plane projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from . import fields as fl
from .errors import DegeneratePreimageError, FluxObstructionError
from .lattice import LatticeField, SLOTS2, wedge

# Calibrated on the degree-1 ball ansatz and frozen; see README, conventions.
CHERN_SIMONS_SU_N = 1.0 / (24.0 * np.pi ** 2)

FLUX_TOL = 1e-6


@dataclass
class ChargeReport:
    """Charge values per route; cs_value has one entry per simple block."""

    cs_value: np.ndarray = None
    whitehead_value: float = None
    linking_value: int = None

    @property
    def rounded(self):
        if self.cs_value is not None:
            return np.rint(self.cs_value).astype(int)
        if self.whitehead_value is not None:
            return np.array([int(np.rint(self.whitehead_value))])
        return np.array([], dtype=int)

    @property
    def max_deviation(self):
        devs = []
        if self.cs_value is not None:
            devs.extend(np.abs(self.cs_value - np.rint(self.cs_value)))
        if self.whitehead_value is not None:
            devs.append(abs(self.whitehead_value - round(self.whitehead_value)))
        return float(max(devs)) if devs else 0.0

    def to_json(self):
        return json.dumps({
            "cs": None if self.cs_value is None else list(map(float, self.cs_value)),
            "whitehead": self.whitehead_value,
            "linking": self.linking_value,
            "rounded": list(map(int, self.rounded)),
            "deviation": self.max_deviation,
        })


@dataclass
class SectorLabel:
    reference_id: str
    charge: tuple
    modulus_note: str


def triple_trace_wedge(alpha, beta, gamma, trace_tensor):
    """tr(alpha ^ beta ^ gamma) as a scalar 3-form, trace via the pair tensor."""
    grid = alpha.grid
    T = trace_tensor
    out = np.zeros((grid.n,) * 3)
    perms = (((0, 1, 2), 1.0), ((1, 2, 0), 1.0), ((2, 0, 1), 1.0),
             ((0, 2, 1), -1.0), ((2, 1, 0), -1.0), ((1, 0, 2), -1.0))
    for (i, j, k), sign in perms:
        out += sign * np.einsum("abc,...a,...b,...c->...",
                                T, alpha.slot(i), beta.slot(j), gamma.slot(k))
    return LatticeField(grid, 3, out[..., None, None])


def chern_simons_charge(a, pair=None, normalization=CHERN_SIMONS_SU_N):
    """Blockwise c * integral tr(a ^ a ^ a) via the four-term isotropy split.

    The four traces (par^3, 3 par^2 perp, 3 par perp^2, perp^3) are formed
    separately and summed; for the CP1 reference the first two vanish
    identically and the split reduces to the helicity-type cross terms.
    """
    pair = pair if pair is not None else a.pair
    apar, aperp = a.split()
    h3 = a.grid.h ** 3
    values = []
    for block in range(pair.n_blocks):
        idx = list(pair.simple_block_map[block])
        T = pair.trace_tensor
        par = LatticeField(a.grid, 1, _restrict(apar.data, idx))
        perp = LatticeField(a.grid, 1, _restrict(aperp.data, idx))
        terms = (
            triple_trace_wedge(par, par, par, T),
            3.0 * triple_trace_wedge(par, par, perp, T),
            3.0 * triple_trace_wedge(par, perp, perp, T),
            triple_trace_wedge(perp, perp, perp, T),
        )
        total = sum(float(np.sum(t.data)) for t in terms) * h3
        values.append(normalization * total)
    return ChargeReport(cs_value=np.array(values))


def _restrict(data, idx):
    out = np.zeros_like(data)
    out[..., idx] = data[..., idx]
    return out


def _subsample_map(psi):
    from .lattice import Grid

    coarse = Grid(psi.grid.n // 2, psi.grid.length)
    return fl.MapField(coarse, psi.pair, psi.values[::2, ::2, ::2], renormalize=False)


def _subsample_lift(u):
    from .lattice import Grid

    coarse = Grid(u.grid.n // 2, u.grid.length)
    return fl.LiftField(coarse, u.pair, u.values[::2, ::2, ::2], renormalize=False)


def chern_simons_from_lift(u, phi=None, extrapolated=True):
    """Chern-Simons charge of a lift, with h^2 Richardson elimination.

    The four-term split is evaluated on the given grid and on its stride-2
    subsample (the same field at spacing 2h); the leading quadratic
    quadrature bias cancels in (4 q_h - q_2h) / 3.  Falls back to the
    plain value when the grid cannot be halved.
    """
    fine = chern_simons_charge(fl.pure_gauge_potential(u, phi))
    if not extrapolated or u.grid.n % 2 or u.grid.n < 8:
        return fine
    u2 = _subsample_lift(u)
    phi2 = None
    if phi is not None:
        phi2 = _subsample_map(phi)
    coarse = chern_simons_charge(fl.pure_gauge_potential(u2, phi2))
    return ChargeReport(cs_value=(4.0 * fine.cs_value - coarse.cs_value) / 3.0)


# ---------------------------------------------------------------------------
# Whitehead / helicity route
# ---------------------------------------------------------------------------

def area_flux_2form(psi):
    """psi^*(Omega / 4 pi) realized as signed plaquette areas over 4 pi.

    Each (mu, nu) slot holds the spherical area swept by the plaquette
    anchored at the site; summed over any closed lattice 2-cycle the total
    is the integer degree of the restriction, so the form is exactly
    closed wherever no lattice cube wraps the sphere.
    """
    if not psi.is_cp1:
        raise ValueError("area flux needs a CP1 map")
    p = psi.values
    h2 = psi.grid.h ** 2
    slots = []
    for mu, nu in SLOTS2:
        p10 = np.roll(p, -1, axis=mu)
        p01 = np.roll(p, -1, axis=nu)
        p11 = np.roll(p10, -1, axis=nu)
        area = (alg.spherical_triangle_area(p, p10, p11)
                + alg.spherical_triangle_area(p, p11, p01))
        # the plaquette area approximates h^2 times the 2-form component
        slots.append(area[..., None] / (4.0 * np.pi * h2))
    return LatticeField.from_slots(psi.grid, 2, slots)


def _check_fluxes(F):
    """Largest flux of the 2-form through any coordinate 2-torus (charge units)."""
    worst = 0.0
    h2 = F.grid.h ** 2
    for slot, (mu, nu) in enumerate(SLOTS2):
        per_slice = np.sum(F.slot(slot)[..., 0], axis=(mu, nu)) * h2
        worst = max(worst, float(np.max(np.abs(per_slice))))
    return worst


def solve_vector_potential(F):
    """A with dA = F, Coulomb-type, via the exact forward-difference symbol.

    Exact at every Fourier mode where F is closed; the zero modes of A are
    set to zero.
    """
    grid = F.grid
    n, h = grid.n, grid.h
    k = np.fft.fftfreq(n, d=1.0 / n)
    sym = (np.exp(2j * np.pi * k / n) - 1.0) / h
    s = [sym.reshape([-1 if ax == m else 1 for ax in range(3)]) for m in range(3)]
    S = sum(np.abs(sm) ** 2 for sm in s)
    S[(0,) * 3] = 1.0  # zero mode handled separately

    Fhat = np.zeros((3, 3, n, n, n), dtype=complex)
    for slot, (mu, nu) in enumerate(SLOTS2):
        f = np.fft.fftn(F.slot(slot)[..., 0])
        Fhat[mu, nu] = f
        Fhat[nu, mu] = -f
    slots = []
    for nu in range(3):
        acc = np.zeros((n, n, n), dtype=complex)
        for mu in range(3):
            if mu != nu:
                acc += np.conj(s[mu]) * Fhat[mu, nu]
        acc /= S
        acc[(0,) * 3] = 0.0
        slots.append(np.real(np.fft.ifftn(acc))[..., None])
    return LatticeField.from_slots(grid, 1, slots)


def _whitehead_plain(psi, return_fields=False):
    F = area_flux_2form(psi)
    flux = _check_fluxes(F)
    if flux > FLUX_TOL:
        raise FluxObstructionError(
            "field not nullhomotopic on 2-skeleton; Whitehead integral "
            f"undefined on T^3 (flux {flux:.3e})")
    A = solve_vector_potential(F)
    AF = wedge(A, F, "scalar")
    value = float(np.sum(AF.data) * psi.grid.h ** 3)
    if return_fields:
        return value, A, F
    return value


def whitehead_charge(psi, return_fields=False, extrapolated=True):
    """Integral of A ^ F with dA = F = psi^*(Omega / 4 pi).

    Requires zero flux through every coordinate 2-torus; raises
    FluxObstructionError otherwise.  As for the Chern-Simons route, the
    quadratic quadrature bias is removed against the stride-2 subsample
    unless extrapolated=False or the grid cannot be halved.
    """
    if return_fields:
        return _whitehead_plain(psi, return_fields=True)
    fine = _whitehead_plain(psi)
    if not extrapolated or psi.grid.n % 2 or psi.grid.n < 8:
        return fine
    try:
        coarse = _whitehead_plain(_subsample_map(psi))
    except FluxObstructionError:
        # the halved field is too rough to carry its fluxes; keep the
        # unextrapolated fine-grid value
        return fine
    return (4.0 * fine - coarse) / 3.0


# ---------------------------------------------------------------------------
# preimage extraction and linking
# ---------------------------------------------------------------------------

def _orthonormal_frame(p):
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    trial = np.array([1.0, 0.0, 0.0])
    if abs(p[0]) > 0.9:
        trial = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(p, trial)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(p, e1)
    return p, e1, e2


_FACE_AXES = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
# parity of (mu, nu, rho) against (x, y, z) for rho the face normal
_FACE_PARITY = {0: 1.0, 1: -1.0, 2: 1.0}


def _face_crossings(psi, p):
    """All transversal crossings of the preimage of p through cell faces.

    Returns arrays: position (physical, may wrap), the cube the curve
    enters, the cube it exits, one row per crossing.
    """
    n = psi.grid.n
    h = psi.grid.h
    p, e1, e2 = _orthonormal_frame(p)
    f1 = psi.values @ e1
    f2 = psi.values @ e2
    f3 = psi.values @ p
    crossings = []

    base = np.stack(np.meshgrid(*(np.arange(n),) * 3, indexing="ij"), axis=-1)
    for rho in range(3):
        mu, nu = _FACE_AXES[rho]
        par = _FACE_PARITY[rho]
        c00 = np.stack([f1, f2, f3], axis=-1)
        c10 = np.roll(c00, -1, axis=mu)
        c01 = np.roll(c00, -1, axis=nu)
        c11 = np.roll(c10, -1, axis=nu)
        # two triangles per face, diagonal 00-11
        for (A, B, C), corners in (
            ((c00, c10, c11), ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0))),
            ((c00, c11, c01), ((0.0, 0.0), (1.0, 1.0), (0.0, 1.0))),
        ):
            d1 = B[..., :2] - A[..., :2]
            d2 = C[..., :2] - A[..., :2]
            det = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                lb = (-A[..., 0] * d2[..., 1] + A[..., 1] * d2[..., 0]) / det
                lc = (-d1[..., 0] * A[..., 1] + d1[..., 1] * A[..., 0]) / det
                hemi = (1.0 - lb - lc) * A[..., 2] + lb * B[..., 2] + lc * C[..., 2]
                ok = ((np.abs(det) > 1e-14) & (lb >= 0) & (lc >= 0)
                      & (lb + lc <= 1) & (hemi > 0))
            if not np.any(ok):
                continue
            idx = np.argwhere(ok)
            lbv = lb[ok]
            lcv = lc[ok]
            sgn = np.sign(det[ok]) * par
            (a0, a1), (b0, b1), (cc0, cc1) = corners
            o1 = (1 - lbv - lcv) * a0 + lbv * b0 + lcv * cc0
            o2 = (1 - lbv - lcv) * a1 + lbv * b1 + lcv * cc1
            pos = idx.astype(float)
            pos[:, mu] += o1
            pos[:, nu] += o2
            for row, s, pp in zip(idx, sgn, pos):
                enter = row.copy()
                exit_ = row.copy()
                exit_[rho] -= 1  # the cube below the face, curve leaves it when s > 0
                if s > 0:
                    crossings.append((pp * h, tuple(enter % n), tuple(exit_ % n)))
                else:
                    crossings.append((pp * h, tuple(exit_ % n), tuple(enter % n)))
    return crossings


def preimage_curves(psi, p, max_attempts=4):
    """Closed preimage polylines of the regular value p, unwrapped to R^3.

    Cell marching with a deterministic tie-break: degenerate configurations
    retry with the regular value rotated by a fixed 1e-7 offset.
    """
    if not psi.is_cp1:
        raise ValueError("preimage extraction needs a CP1 map")
    n, h = psi.grid.n, psi.grid.h
    L = psi.grid.length
    value = np.asarray(p, dtype=float)
    for attempt in range(max_attempts):
        crossings = _face_crossings(psi, value)
        if not crossings:
            raise DegeneratePreimageError(
                "no preimage of the regular value; choose a different one")
        by_entry = {}
        by_exit = {}
        degenerate = False
        for ci, (_, enter, exit_) in enumerate(crossings):
            by_entry.setdefault(enter, []).append(ci)
            by_exit.setdefault(exit_, []).append(ci)
        for cube in set(by_entry) | set(by_exit):
            if len(by_entry.get(cube, ())) != len(by_exit.get(cube, ())):
                degenerate = True
                break
        if degenerate:
            tilt = alg.qexp(1e-7 * (attempt + 1) * np.array([1.0, 1.0, 1.0]))
            value = alg.qrotate(tilt, value)
            continue
        try:
            loops = _walk_loops(crossings, by_exit, psi.grid)
        except DegeneratePreimageError:
            tilt = alg.qexp(1e-7 * (attempt + 1) * np.array([1.0, 1.0, 1.0]))
            value = alg.qrotate(tilt, value)
            continue
        return loops
    raise DegeneratePreimageError(
        "preimage extraction degenerate; choose a different regular value")


def _walk_loops(crossings, by_exit, grid):
    """Connect face crossings into closed loops.

    Inside a multiply-traversed cube the exit continuing a strand is taken
    to be the unused one nearest to the entry point (distances on the
    torus); a clean strand separation makes this unambiguous.
    """
    L = grid.length
    used = set()
    loops = []

    def torus_dist(p, q):
        delta = np.abs(p - q)
        return float(np.linalg.norm(np.minimum(delta, L - delta)))

    for start in range(len(crossings)):
        if start in used:
            continue
        loop = []
        ci = start
        guard = 0
        while True:
            used.add(ci)
            pos, enter, _ = crossings[ci]
            loop.append(pos)
            candidates = [c for c in by_exit.get(enter, ()) if c not in used]
            if start in by_exit.get(enter, ()) and len(loop) > 1:
                candidates.append(start)
            if not candidates:
                raise DegeneratePreimageError("preimage walk dead-ended")
            ci = min(candidates, key=lambda c: (torus_dist(crossings[c][0], pos), c))
            guard += 1
            if ci == start or guard > len(crossings) + 1:
                break
        if ci != start:
            raise DegeneratePreimageError("preimage walk failed to close")
        pts = _unwrap(loop, L)
        if np.any(np.rint((pts[0] - pts[-1]) / L) != 0):
            raise DegeneratePreimageError(
                "preimage loop winds the torus; linking in R^3 undefined")
        pts.append(pts[0])
        loops.append(np.array(pts))
    return loops


def _unwrap(points, L):
    out = [np.asarray(points[0], dtype=float)]
    for q in points[1:]:
        q = np.asarray(q, dtype=float)
        prev = out[-1]
        shift = np.rint((q - prev) / L)
        out.append(q - shift * L)
    return out


def _project_frame(attempt):
    """A deterministic family of generic projection frames."""
    rng = np.random.default_rng(1234 + attempt)
    q = alg.qnormalize(rng.standard_normal(4))
    basis = np.eye(3)
    return np.stack([alg.qrotate(q, basis[i]) for i in range(3)])


def _crossing_number(curve1, curve2, frame):
    """Sum of signs over crossings where curve1 passes over curve2.

    Returns None when the projection is degenerate for these polylines.
    """
    p1 = curve1 @ frame.T
    p2 = curve2 @ frame.T
    a = p1[:-1]
    b = p1[1:]
    c = p2[:-1]
    e = p2[1:]
    total = 0
    for i in range(len(a)):
        d1 = b[i, :2] - a[i, :2]
        r = c[:, :2] - a[i, :2]
        d2 = e[:, :2] - c[:, :2]
        det = d1[0] * d2[:, 1] - d1[1] * d2[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
            s = (r[:, 0] * d1[1] - r[:, 1] * d1[0]) / det
        cand = np.nonzero((np.abs(det) > 1e-12) & (t > 0) & (t < 1) & (s > 0) & (s < 1))[0]
        for j in cand:
            if min(t[j], 1 - t[j], s[j], 1 - s[j]) < 1e-9:
                return None  # endpoint graze: ask for another frame
            z1 = p1[i, 2] + t[j] * (p1[i + 1, 2] - p1[i, 2])
            z2 = p2[j, 2] + s[j] * (p2[j + 1, 2] - p2[j, 2])
            if abs(z1 - z2) < 1e-12:
                return None
            if z1 > z2:
                total += 1 if det[j] > 0 else -1
    return total


def gauss_linking(curve1, curve2, max_attempts=8):
    """Gauss linking number of two closed polylines by signed crossing count."""
    for attempt in range(max_attempts):
        frame = _project_frame(attempt)
        val = _crossing_number(curve1, curve2, frame)
        if val is not None:
            return int(val)
    raise DegeneratePreimageError("no generic projection found for linking count")


def linking_charge(psi, p=(0.0, 1.0, 0.0), q=(0.0, 0.0, 1.0)):
    """Hopf charge as the linking number of two preimage families."""
    curves_p = preimage_curves(psi, p)
    curves_q = preimage_curves(psi, q)
    total = 0
    for cp in curves_p:
        for cq in curves_q:
            total += gauss_linking(cp, cq)
    return int(total)


# ---------------------------------------------------------------------------
# sectors
# ---------------------------------------------------------------------------

def assign_sector(psi, phi, u, reference_id="reference", tol=1e-10):
    """Certify psi = u . phi and label its sector by the charge of the lift."""
    moved = fl.act(u, phi)
    defect = float(np.max(np.linalg.norm(moved.values - psi.values, axis=-1)))
    if defect > tol:
        raise ValueError(f"factorization residual {defect:.3e} exceeds {tol:g}")
    a = fl.pure_gauge_potential(u, phi)
    report = chern_simons_charge(a, phi.pair)
    note = ("charge is reported as raw integers; equality mod the stabilizer "
            "subgroup O_phi is decided only for constant references, where "
            "O_phi is trivial")
    return SectorLabel(reference_id=reference_id,
                       charge=tuple(int(v) for v in report.rounded),
                       modulus_note=note)
