"""Time the compiled element kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--h 0.05] [--repeat 5]

Both backends run on identical element arrays gathered from a generated
mesh; the script also reports the largest output difference.
"""

import argparse
import timeit

import numpy as np

from irkfsi import _kernels_py
from irkfsi.fluid import FluidParams
from irkfsi.mesh import BenchmarkGeometry, generate_benchmark
from irkfsi.problem import build_problem
from irkfsi.solid import SolidParams

try:
    from irkfsi import _kernels_cy
except ImportError:
    _kernels_cy = None


def _cases(pb, rng):
    f, s = pb.fluid, pb.solid
    u = 0.1 * rng.standard_normal(f.nu)
    X = 1e-3 * rng.standard_normal(f.nu)
    w = 0.1 * rng.standard_normal(f.nu)
    p = rng.standard_normal(f.np_)
    fargs = f._args(u, p, X, w)
    d = 1e-3 * rng.standard_normal(s.ns)
    sargs = (s.xe, s._de(d), s.lam, s.mu, s.svk, s.ref.dN, s.ref.weights)
    return {
        "fluid_residual": (fargs, ()),
        "fluid_jacobian": (fargs, ()),
        "fluid_shape_fd": (fargs, (1e-7,)),
        "solid_residual": (sargs, ()),
        "solid_jacobian": (sargs, ()),
    }


def _maxdiff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.abs(np.asarray(x) - np.asarray(y)).max()) for x, y in zip(a, b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mesh = generate_benchmark(BenchmarkGeometry("vertical_beam", args.h))
    pb = build_problem(mesh, FluidParams(), SolidParams())
    rng = np.random.default_rng(0)
    print(f"vertical beam h={args.h}: {len(mesh.triangles)} triangles, "
          f"{len(pb.fluid.vel_elements)} fluid / {len(pb.solid.dofs)} solid elements")
    if _kernels_cy is None:
        print("compiled kernels not built; only the NumPy backend is available")
    print(f"{'kernel':<16} {'numpy [ms]':>11} {'cython [ms]':>12} {'speed-up':>9} {'max diff':>10}")
    for name, (a, extra) in _cases(pb, rng).items():
        call = a + extra
        fp = getattr(_kernels_py, name)
        tp = min(timeit.repeat(lambda: fp(*call), number=1, repeat=args.repeat))
        if _kernels_cy is None:
            print(f"{name:<16} {1e3 * tp:11.2f}")
            continue
        fc = getattr(_kernels_cy, name)
        tc = min(timeit.repeat(lambda: fc(*call), number=1, repeat=args.repeat))
        print(f"{name:<16} {1e3 * tp:11.2f} {1e3 * tc:12.2f} {tp / tc:9.1f} {_maxdiff(fp(*call), fc(*call)):10.2e}")


if __name__ == "__main__":
    main()
