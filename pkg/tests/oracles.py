"""Slow, independent reference implementations used as test oracles.

None of these import the code paths they check.
"""

import itertools
import math


def box_polygon(cx, cz, yaw, length, width):
    """Corners from the KITTI rotation x' = x cos + z sin, z' = -x sin + z cos."""
    c, s = math.cos(yaw), math.sin(yaw)
    pts = []
    for ox, oz in ((length / 2, width / 2), (-length / 2, width / 2), (-length / 2, -width / 2), (length / 2, -width / 2)):
        pts.append((cx + ox * c + oz * s, cz - ox * s + oz * c))
    if signed_area(pts) < 0:
        pts.reverse()
    return pts


def signed_area(poly):
    return 0.5 * sum(x0 * z1 - x1 * z0 for (x0, z0), (x1, z1) in zip(poly, poly[1:] + poly[:1]))


def clip(subject, clipper):
    """Sutherland-Hodgman: part of convex ``subject`` inside convex CCW ``clipper``."""
    out = list(subject)
    for (ax, az), (bx, bz) in zip(clipper, clipper[1:] + clipper[:1]):
        if not out:
            break

        def inside(p):
            return (bx - ax) * (p[1] - az) - (bz - az) * (p[0] - ax) >= 0

        def cross_point(p, q):
            dx, dz = q[0] - p[0], q[1] - p[1]
            ex, ez = bx - ax, bz - az
            denom = ex * dz - ez * dx
            t = (ez * (p[0] - ax) - ex * (p[1] - az)) / denom
            return (p[0] + t * dx, p[1] + t * dz)

        inp, out = out, []
        for p, q in zip(inp, inp[1:] + inp[:1]):
            if inside(q):
                if not inside(p):
                    out.append(cross_point(p, q))
                out.append(q)
            elif inside(p):
                out.append(cross_point(p, q))
    return out


def intersection_area(poly_a, poly_b):
    pts = clip(poly_a, poly_b)
    return abs(signed_area(pts)) if len(pts) >= 3 else 0.0


def _point_segment_distance(p, a, b):
    ax, az = a
    dx, dz = b[0] - ax, b[1] - az
    t = ((p[0] - ax) * dx + (p[1] - az) * dz) / (dx * dx + dz * dz)
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (az + t * dz))


def boundary_distance(poly_a, poly_b):
    """Min distance between the two polygon boundaries."""
    best = math.inf
    for src, dst in ((poly_a, poly_b), (poly_b, poly_a)):
        for p in src:
            for a, b in zip(dst, dst[1:] + dst[:1]):
                best = min(best, _point_segment_distance(p, a, b))
    return best


def brute_force_min_assignment(cost):
    """Minimum total over all injective row->column (or column->row) maps."""
    n = len(cost)
    m = len(cost[0]) if n else 0
    if n == 0 or m == 0:
        return 0.0
    best = math.inf
    if n <= m:
        for cols in itertools.permutations(range(m), n):
            best = min(best, math.fsum(cost[i][c] for i, c in enumerate(cols)))
    else:
        for rows in itertools.permutations(range(n), m):
            best = min(best, math.fsum(cost[r][j] for j, r in enumerate(rows)))
    return best


def brute_force_ks(a, b):
    best = 0.0
    for x in list(a) + list(b):
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def axis_aligned_contact(pa, va, ext_a, pb, vb, ext_b):
    """Closed-form overlap interval [t0, t1] (t >= 0) for axis-aligned boxes.

    ``ext`` is the half extent along (x, z). Returns None if the boxes never
    overlap for t >= 0.
    """
    lo, hi = 0.0, math.inf
    for k in range(2):
        d = pb[k] - pa[k]
        v = vb[k] - va[k]
        r = ext_a[k] + ext_b[k]
        if v == 0:
            if abs(d) > r:
                return None
            continue
        t_enter, t_exit = sorted(((-r - d) / v, (r - d) / v))
        lo, hi = max(lo, t_enter), min(hi, t_exit)
    if lo > hi:
        return None
    return lo, hi
