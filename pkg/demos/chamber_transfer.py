"""Carrying a reflection-invariant body to an unconditional one.

A body invariant under a finite reflection group is determined by its piece in
one Weyl chamber. The chamber transfer sends the chamber generators to the
coordinate basis, so the piece becomes a corner of an unconditional body.

Run with ``python3 demos/chamber_transfer.py``.
"""
from logbm.bodies import cut_corners, make_box
from logbm.coxeter import (chamber_generators, chamber_transfer, chamber_volume, group_order,
                           unconditionalize)


def main():
    for kind, rank in (("A", 2), ("B", 3), ("D", 4), ("E6", None)):
        rs = chamber_generators(kind, rank)
        Phi, cert = chamber_transfer(rs.generators)
        print(f"{rs.name:>5}: |W| = {group_order(rs):6d}, certificate ok = {cert.ok}, "
              f"min transferred coordinate = {cert.min_coordinate:.4f}")

    rs = chamber_generators("B", 3)
    K = cut_corners(make_box([1.0, 1.0, 1.0]), 0.3)
    Kt = unconditionalize(K, rs)
    print(f"\ncut cube under B3: V(K) = {K.volume:.5f}, chamber piece = {chamber_volume(K, rs):.5f}, "
          f"|W| * piece = {group_order(rs) * chamber_volume(K, rs):.5f}")
    print(f"unconditional image has {len(Kt.normals)} facets and volume {Kt.volume:.5f}")


if __name__ == "__main__":
    main()
