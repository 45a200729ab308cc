"""Two boxes whose half-half logarithmic sum is a square, then cut at the corners.

The uncut boxes are diagonal images of each other and have zero
log-Brunn-Minkowski excess. Cutting corners by depth ``eps**(1/n)`` removes
about ``eps`` of volume from each, while the logarithmic sum stays the square.
The table shows the excess and the best diagonal misfit both shrinking in
proportion to ``eps``.

Run with ``python3 demos/corner_cut_boxes.py``.
"""
import math

from logbm.bodies import cut_corners, make_box
from logbm.cli import corner_boxes
from logbm.logops import l0_sum
from logbm.measure import volume_exact
from logbm.stability import best_diagonal_fit


def main(n=2):
    a, c = corner_boxes(n)
    print(f"K0 half-widths {a}, C0 half-widths {c}")
    print(f"{'eps':>8} {'V(K)':>10} {'V(C)':>10} {'V(l0)':>10} {'excess':>10} {'fit misfit':>11}")
    # the cut depth may not exceed the smallest half-width, 1/2 in the plane
    for eps in (2e-1, 1e-1, 1e-2, 1e-3, 1e-4):
        depth = eps ** (1.0 / n)
        K, C = cut_corners(make_box(a), depth), cut_corners(make_box(c), depth)
        VK, VC = volume_exact(K), volume_exact(C)
        VW = volume_exact(l0_sum(K, C, 0.5))
        fit = best_diagonal_fit(K, C)
        print(f"{eps:8.0e} {VK:10.5f} {VC:10.5f} {VW:10.5f} {VW / math.sqrt(VK * VC) - 1:10.2e} "
              f"{fit.residual:11.4f}")


if __name__ == "__main__":
    main()
