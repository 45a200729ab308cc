"""How the stability report reacts as a diamond is stretched away from a diagonal image.

For each stretch we compare the measured log-Brunn-Minkowski excess, the
distance to the nearest block decomposition and the bound that distance is
allowed by the theory (with the configured constant).

Run with ``python3 demos/stability_scan.py``.
"""
import numpy as np

from logbm.bodies import cut_corners, make_box
from logbm.logops import DiagonalMap
from logbm.stability import stability_report


def main():
    cube = make_box([1.0, 1.0, 1.0])
    K = cut_corners(cube, 0.4)
    print(f"{'stretch':>8} {'eps':>10} {'delta':>8} {'bound':>9} {'partition'}")
    for s in (1.0, 1.1, 1.5, 2.0, 4.0):
        # deeper cuts keep C from being an exact diagonal image of K
        C = DiagonalMap([s, 1.0, 1.0 / s]).apply(cut_corners(cube, min(0.4 + 0.1 * (s - 1.0), 0.9)))
        r = stability_report(K, C, lam=0.5, tau=0.5, seed=0)
        print(f"{s:8.2f} {r.eps:10.2e} {r.delta:8.4f} {r.bound:9.3g} {r.partition}")
    print("fitted diagonal of the last pair:", np.round(r.phi, 4))


if __name__ == "__main__":
    main()
