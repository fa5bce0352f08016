"""Benchmark the two resolvent-norm grid backends.

The compiled kernel Schur-triangularizes once and runs inverse Lanczos
with O(n^2) triangular solves per node; the pure-NumPy fallback does one
dense SVD per node.  Run after building the extension in place:

    python setup.py build_ext --inplace
    python benchmarks/bench_smin_grid.py
"""

import time

import numpy as np

from qbl.model import KOC, build_stencil
from qbl.operators import OBC, assemble
from qbl.pseudospec import smin_backend_name


def run(n_sites, res, workers=1):
    D = assemble(build_stencil(KOC(j=2.0, delta=1.0, omega=0.0)), OBC, n_sites)
    region = (-3.0, 3.0, -2.0, 2.0)
    import qbl.pseudospec as ps

    out = {}
    for label, force in (("compiled", False), ("pure-numpy", True)):
        if not force and smin_backend_name() != "cython":
            print("compiled backend unavailable; skipping")
            continue
        A = D.G
        zs = (np.linspace(*region[:2], res[0])[None, :]
              + 1j * np.linspace(*region[2:], res[1])[:, None]).ravel()
        t0 = time.time()
        vals = ps.smin_values(A, zs, workers=workers, force_pure=force)
        out[label] = (time.time() - t0, vals)
    return out


def main():
    print(f"selected backend: {smin_backend_name()}")
    for n_sites, res in ((30, (120, 90)), (60, (120, 90))):
        print(f"\nmatrix {2 * n_sites}x{2 * n_sites}, grid {res[0]}x{res[1]} "
              f"({res[0] * res[1]} nodes)")
        out = run(n_sites, res)
        base = None
        for label, (dt, vals) in out.items():
            nodes_per_s = res[0] * res[1] / dt
            print(f"  {label:12s} {dt:8.2f} s   {nodes_per_s:9.0f} nodes/s")
            if base is None:
                base = (dt, vals)
            else:
                speedup = dt / base[0]
                err = np.abs(base[1] - vals).max()
                print(f"  {'':12s} speedup x{speedup:.1f}, max |diff| {err:.2e}")


if __name__ == "__main__":
    main()
