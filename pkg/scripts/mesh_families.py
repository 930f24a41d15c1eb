"""Print h, gamma_h and manifold checks for the sphere and torus families; optionally write OFF files."""

import argparse
import os

from surfheat.geometry import sphere, torus
from surfheat.mesh import build_mesh, surface_area, validate_manifold, write_off


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--off-dir", help="write each mesh as OFF here")
    args = ap.parse_args()
    if args.off_dir:
        os.makedirs(args.off_dir, exist_ok=True)
    for surf in (sphere(), torus()):
        print(f"\n{surf.name}")
        print("level      V      F         h   gamma_h   area defect   euler  ok")
        for level in range(args.levels + 1):
            m = build_mesh(surf, level)
            d = validate_manifold(m)
            defect = surf.exact_area - surface_area(m) if surf.exact_area else float("nan")
            print(f"{level:>5} {m.n_vertices:>6} {m.n_triangles:>6} {m.h:9.4f} {m.gamma_h:9.4f}"
                  f" {defect:13.3e} {d.euler_characteristic:>7}  {d.ok}")
            if args.off_dir:
                write_off(m, os.path.join(args.off_dir, f"{surf.name}_L{level}.off"))


if __name__ == "__main__":
    main()
