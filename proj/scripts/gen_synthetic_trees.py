#!/usr/bin/env python3
"""Writes the synthetic neurite trees under data/ as SWC files.

Every tree is a small binary tree with gently curved branches, radii tapering
from about 1.4 um at the root to 1.0 um at the tips, and branch lengths chosen
so the 0.5 um section spacing yields on the order of a hundred sections. The
output is deterministic; re-running the script reproduces the files byte for
byte.
"""

import math
import os

SPACING = 2.0  # node spacing along each branch, um


def branch(start, direction, length, r0, r1, bend=0.0, bend_axis=(0.0, 0.0, 1.0)):
    """Polyline from start along direction, turning `bend` radians in total."""
    steps = max(2, int(round(length / SPACING)))
    pts = []
    d = list(direction)
    norm = math.sqrt(sum(c * c for c in d))
    d = [c / norm for c in d]
    pos = list(start)
    for i in range(1, steps + 1):
        t = i / steps
        if bend != 0.0:
            ang = bend / steps
            ax, ay, az = bend_axis
            c, s = math.cos(ang), math.sin(ang)
            # Rodrigues rotation of d around the bend axis.
            dot = d[0] * ax + d[1] * ay + d[2] * az
            cross = [ay * d[2] - az * d[1], az * d[0] - ax * d[2], ax * d[1] - ay * d[0]]
            d = [d[k] * c + cross[k] * s + [ax, ay, az][k] * dot * (1 - c) for k in range(3)]
        step = length / steps
        pos = [pos[k] + d[k] * step for k in range(3)]
        pts.append((tuple(pos), r0 + (r1 - r0) * t, tuple(d)))
    return pts


def rot(v, axis, ang):
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    ax, ay, az = ax / n, ay / n, az / n
    c, s = math.cos(ang), math.sin(ang)
    dot = v[0] * ax + v[1] * ay + v[2] * az
    cross = [ay * v[2] - az * v[1], az * v[0] - ax * v[2], ax * v[1] - ay * v[0]]
    return tuple(v[k] * c + cross[k] * s + [ax, ay, az][k] * dot * (1 - c) for k in range(3))


class Builder:
    def __init__(self, root_radius):
        self.rows = [((0.0, 0.0, 0.0), root_radius, -1)]

    def add(self, parent_idx, pts):
        idx = parent_idx
        for pos, r, _ in pts:
            self.rows.append((pos, r, idx))
            idx = len(self.rows) - 1
        return idx

    def write(self, path):
        with open(path, "w") as f:
            f.write("# synthetic neurite tree, coordinates in um\n")
            for i, (pos, r, parent) in enumerate(self.rows):
                f.write(
                    "%d 1 %.4f %.4f %.4f %.4f %d\n"
                    % (i + 1, pos[0], pos[1], pos[2], r, -1 if parent < 0 else parent + 1)
                )


def tree_a():
    b = Builder(1.40)
    trunk = branch((0, 0, 0), (1, 0, 0), 14.0, 1.40, 1.30, bend=0.25)
    j1 = b.add(0, trunk)
    end, endr, endd = trunk[-1]
    up = branch(end, rot(endd, (0, 0, 1), 0.6), 12.0, 1.18, 1.08, bend=-0.35)
    j2 = b.add(j1, up)
    upe, _, upd = up[-1]
    b.add(j2, branch(upe, rot(upd, (0, 0, 1), 0.55), 8.0, 1.05, 1.00))
    b.add(j2, branch(upe, rot(upd, (0.2, 0, 1), -0.5), 8.0, 1.05, 1.00, bend=0.2))
    b.add(j1, branch(end, rot(endd, (0, 0.15, 1), -0.65), 16.0, 1.16, 1.00, bend=0.3))
    return b


def tree_b():
    b = Builder(1.38)
    trunk = branch((0, 0, 0), (1, 0.1, 0), 10.0, 1.38, 1.28, bend=-0.2)
    j1 = b.add(0, trunk)
    end, endr, endd = trunk[-1]
    left = branch(end, rot(endd, (0, 0, 1), 0.7), 12.0, 1.15, 1.02, bend=0.25)
    j2 = b.add(j1, left)
    le, _, ld = left[-1]
    b.add(j2, branch(le, rot(ld, (0, 0, 1), 0.5), 9.0, 1.02, 1.00, bend=-0.15))
    b.add(j2, branch(le, rot(ld, (0.1, 0, 1), -0.55), 9.0, 1.02, 1.00))
    b.add(j1, branch(end, rot(endd, (0, 0.2, 1), -0.6), 12.0, 1.15, 1.00, bend=-0.3))
    return b


def tree_c():
    b = Builder(1.42)
    trunk = branch((0, 0, 0), (1, -0.05, 0.05), 12.0, 1.42, 1.30, bend=0.3, bend_axis=(0, 1, 1))
    j1 = b.add(0, trunk)
    end, endr, endd = trunk[-1]
    upper = branch(end, rot(endd, (0, 0, 1), 0.5), 14.0, 1.17, 1.03, bend=-0.4)
    j2 = b.add(j1, upper)
    ue, _, ud = upper[-1]
    b.add(j2, branch(ue, rot(ud, (0, 0, 1), 0.6), 7.0, 1.02, 1.00))
    b.add(j2, branch(ue, rot(ud, (0, 0.1, 1), -0.45), 9.0, 1.02, 1.00, bend=0.2))
    b.add(j1, branch(end, rot(endd, (0.1, 0, 1), -0.7), 10.0, 1.14, 1.00, bend=0.25))
    return b


def tree_d():
    b = Builder(1.36)
    trunk = branch((0, 0, 0), (1, 0, -0.05), 10.0, 1.36, 1.26, bend=-0.25)
    j1 = b.add(0, trunk)
    end, endr, endd = trunk[-1]
    up = branch(end, rot(endd, (0, 0, 1), 0.55), 12.0, 1.14, 1.04, bend=0.3)
    j2 = b.add(j1, up)
    down = branch(end, rot(endd, (0, 0.1, 1), -0.6), 12.0, 1.14, 1.04, bend=-0.2)
    j3 = b.add(j1, down)
    ue, _, ud = up[-1]
    b.add(j2, branch(ue, rot(ud, (0, 0, 1), 0.5), 8.0, 1.03, 1.00))
    b.add(j2, branch(ue, rot(ud, (0.15, 0, 1), -0.5), 8.0, 1.03, 1.00, bend=0.15))
    de, _, dd = down[-1]
    b.add(j3, branch(de, rot(dd, (0, 0, 1), 0.45), 8.0, 1.03, 1.00, bend=-0.15))
    b.add(j3, branch(de, rot(dd, (0, 0.1, 1), -0.55), 8.0, 1.03, 1.00))
    return b


def ytree_small():
    b = Builder(1.30)
    trunk = branch((0, 0, 0), (1, 0, 0), 6.0, 1.30, 1.20)
    j1 = b.add(0, trunk)
    end, endr, endd = trunk[-1]
    b.add(j1, branch(end, rot(endd, (0, 0, 1), 0.6), 5.0, 1.08, 1.00))
    b.add(j1, branch(end, rot(endd, (0, 0, 1), -0.6), 5.0, 1.08, 1.00))
    return b


def main():
    out = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
    os.makedirs(out, exist_ok=True)
    for name, make in [
        ("tree_a", tree_a),
        ("tree_b", tree_b),
        ("tree_c", tree_c),
        ("tree_d", tree_d),
        ("ytree_small", ytree_small),
    ]:
        make().write(os.path.join(out, name + ".swc"))
        print("wrote", name + ".swc")


if __name__ == "__main__":
    main()
