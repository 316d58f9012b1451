"""Compare the compiled and numpy search kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3]

Each case runs both backends on identical inputs, checks that they agree
and reports the best wall-clock time of ``--repeat`` runs.
"""
import argparse
import time

import numpy as np

from pbdcs._kernels import _pykernels
from pbdcs.construction import build_with_kind
from pbdcs.designs import projective_plane, steiner_triple_system
from pbdcs.hadamard import fourier, real_hadamard

try:
    from pbdcs._kernels import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def best_of(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def max_zeros_cases():
    for h, u in [(fourier(8), 4), (fourier(12), 4), (real_hadamard(12), 5), (fourier(16), 3)]:
        m = np.ascontiguousarray(h.entries[:, :u])
        yield f"max_zeros {h.kind}({h.order}) u={u}", (m, 1e-9, 1e-9)


def dependent_sets_cases():
    for label, m, s in [
        ("Fano", build_with_kind(projective_plane(2)), 6),
        ("STS(7)", build_with_kind(steiner_triple_system(7)), 5),
        ("PG(2,3)", build_with_kind(projective_plane(3)), 3),
    ]:
        phi = np.ascontiguousarray(m.entries)
        gram = np.ascontiguousarray(phi.conj().T @ phi)
        yield f"dependent_sets {label} s={s}", (phi, gram, s, 1e-6, 64)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'case':<36}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name, cases in [("max_zeros", max_zeros_cases()), ("dependent_sets", dependent_sets_cases())]:
        for label, a in cases:
            rc, tc = best_of(lambda: getattr(_ckernels, name)(*a), args.repeat)
            rp, tp = best_of(lambda: getattr(_pykernels, name)(*a), args.repeat)
            if name == "dependent_sets":
                assert sorted(rc[0]) == sorted(rp[0]), label
            else:
                assert rc == rp, label
            print(f"{label:<36}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
