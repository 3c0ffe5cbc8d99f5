#!/usr/bin/env python3
"""Regenerate the Tracy-Widom CDF tables shipped in this directory.

The CDFs are evaluated as Fredholm determinants discretized with
Gauss-Legendre quadrature (Nystrom method):

    F2(s) = det(I - K_Ai)      on L2(s, inf),
            K_Ai(x, y) = (Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y)
    F1(s) = det(I - B_s)       on L2(0, inf),
            B_s(x, y) = Ai((x + y) / 2 + s) / 2

Usage: python3 generate_tw_tables.py [output_dir]
Requires numpy and scipy.
"""
import sys
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import airy

T_MIN, T_MAX, STEP = -5.0, 4.0, 0.05
NODES = 120


def _quadrature(start, length):
    x, w = leggauss(NODES)
    return start + (x + 1.0) * length / 2.0, w * length / 2.0


def tw2_cdf(s):
    x, w = _quadrature(s, 16.0)
    ai, aip, _, _ = airy(x)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    k = (np.outer(ai, aip) - np.outer(aip, ai)) / dx
    k[np.diag_indices(NODES)] = aip**2 - x * ai**2
    sw = np.sqrt(w)
    return np.linalg.det(np.eye(NODES) - sw[:, None] * k * sw[None, :])


def tw1_cdf(s):
    x, w = _quadrature(0.0, 40.0)
    k = 0.5 * airy((x[:, None] + x[None, :]) / 2.0 + s)[0]
    sw = np.sqrt(w)
    return np.linalg.det(np.eye(NODES) - sw[:, None] * k * sw[None, :])


def write_table(path, order, cdf):
    count = int(round((T_MAX - T_MIN) / STEP)) + 1
    with open(path, "w", newline="\n") as out:
        out.write(f"# Tracy-Widom distribution, order {order}\n")
        out.write("# Fredholm determinant, Gauss-Legendre Nystrom discretization\n")
        out.write(f"# nodes={NODES} step={STEP}\n")
        out.write("# t cdf\n")
        for i in range(count):
            t = T_MIN + i * STEP
            out.write(f"{t:.2f} {cdf(t):.17e}\n")


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    write_table(out_dir / "tw1.txt", 1, tw1_cdf)
    write_table(out_dir / "tw2.txt", 2, tw2_cdf)


if __name__ == "__main__":
    main()
