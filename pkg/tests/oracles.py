"""Independent oracles used by the tests.

These deliberately avoid the code paths they check: the degree oracles
work directly on the 4-component lift values, and the linking oracle is
the Gauss double sum over polyline segment pairs.

Orientation dictionary, frozen: with the package conventions (x-fastest
site ordering, right-handed axes, quaternion basis i, j, k) the charge
reported by the library equals MINUS the degree computed by the
det[u, d1 u, d2 u, d3 u] volume formula below, and equals the raw
ray-crossing count of signed_preimage_count with its target-last frame
ordering.  All routes in the library share one convention; the oracles
carry the conversion.
"""

import numpy as np

from hopfion.lattice import centered_diff

CHARGE_FROM_VOLUME = -1.0

# Freudenthal subdivision: six tetrahedra per cube, one per axis permutation
_PERMS = (((0, 1, 2), 1), ((0, 2, 1), -1), ((1, 0, 2), -1),
          ((1, 2, 0), 1), ((2, 0, 1), 1), ((2, 1, 0), -1))


def volume_degree(u):
    """Degree of a lift via (1/2 pi^2) int det[u, du] with centered differences."""
    h = u.grid.h
    v = u.values
    cols = [v] + [centered_diff(v, mu, h) for mu in range(3)]
    M = np.stack(cols, axis=-1)
    return float(np.sum(np.linalg.det(M)) * h ** 3 / (2.0 * np.pi ** 2))


def signed_preimage_count(u, target=None):
    """Exact integer degree by counting ray hits of a simplexwise-linear map.

    Each cube splits into six tetrahedra; on each the 4-component field is
    affine and the ray through the regular value crosses its image simplex
    at most once.  The signed count over all tetrahedra is the degree of
    the radially projected PL map.
    """
    if target is None:
        target = np.array([0.31, 0.52, -0.41, 0.68])
    target = np.asarray(target, dtype=float)
    target /= np.linalg.norm(target)
    v = u.values
    total = 0
    for perm, parity in _PERMS:
        verts = [v]
        cur = v
        for axis in perm:
            cur = np.roll(cur, -1, axis=axis)
            verts.append(cur)
        # solve sum_i lam_i verts_i - t * target = 0, sum lam = 1
        A = np.zeros(v.shape[:3] + (5, 5))
        for i, vv in enumerate(verts):
            A[..., :4, i] = vv
        A[..., :4, 4] = -target
        A[..., 4, :4] = 1.0
        b = np.zeros(5)
        b[4] = 1.0
        ok = np.abs(np.linalg.det(A)) > 1e-14
        sol = np.full(v.shape[:3] + (5,), -1.0)
        sol[ok] = np.linalg.solve(A[ok], b)
        hit = ok & np.all(sol[..., :4] >= 0.0, axis=-1) & (sol[..., 4] > 0.0)
        if not np.any(hit):
            continue
        frame = np.stack([verts[i + 1] - verts[0] for i in range(3)] + [np.broadcast_to(target, v.shape)], axis=-1)
        signs = np.sign(np.linalg.det(frame[hit]))
        total += parity * int(np.sum(signs))
    return int(round(total))


def gauss_integral_linking(c1, c2):
    """Gauss double sum over segment midpoints of two closed polylines."""
    r1 = 0.5 * (c1[1:] + c1[:-1])
    d1 = c1[1:] - c1[:-1]
    r2 = 0.5 * (c2[1:] + c2[:-1])
    d2 = c2[1:] - c2[:-1]
    total = 0.0
    for i in range(len(r1)):
        diff = r1[i][None, :] - r2
        cross = np.cross(np.broadcast_to(d1[i], d2.shape), d2)
        dist3 = np.sum(diff * diff, axis=-1) ** 1.5
        total += np.sum(np.sum(cross * diff, axis=-1) / dist3)
    return total / (4.0 * np.pi)
