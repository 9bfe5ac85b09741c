"""Compare the compiled and pure-Python Lindblad right-hand sides.

    python benchmarks/bench_rhs.py [--cutoffs 4 7 10 16] [--repeat 5]

For each cutoff the headline model (ratio 0.75, Gamma_r = Gamma_phi = 20) is
prepared once per backend; the table shows the median time of one RHS call
(one RK4 step costs four), the speedup, and the largest difference between
the two outputs on a random state.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from tmsv import _core
from tmsv.dynamics import Generator, effective_model
from tmsv.fockspace import CompositeSpace
from tmsv.model import EffectiveParams


def random_packed(gen: Generator, rng: np.random.Generator) -> np.ndarray:
    """Random state restricted to the charge blocks the generator stores."""
    lay = gen.layout
    a = lay.unpack(rng.normal(size=lay.size) + 1j * rng.normal(size=lay.size))
    rho = a @ a.conj().T
    return gen.pack(rho / np.trace(rho))


def time_call(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    n, _ = timer.autorange()
    return float(np.median(timer.repeat(repeat, n))) / n


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cutoffs", type=int, nargs="+", default=[4, 7, 10, 16])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if _core.compiled_backend is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    eff = EffectiveParams.from_ratio(0.75, 40.0)
    rng = np.random.default_rng(1)
    print(f"{'cutoff':>6} {'dim':>6} {'packed':>8} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8} {'max diff':>10}")
    for n in args.cutoffs:
        space = CompositeSpace.canonical(n)
        model = effective_model(eff, space, 20.0, 20.0)
        gens = {b: Generator(model, backend=b) for b in ("python", "cython")}
        vec = random_packed(gens["python"], rng)
        outs, times = {}, {}
        for name, gen in gens.items():
            out = np.empty_like(vec)
            times[name] = time_call(lambda: gen(vec, out=out), args.repeat)
            outs[name] = gen(vec).copy()
        diff = np.abs(outs["python"] - outs["cython"]).max()
        print(f"{n:>6} {space.dim:>6} {vec.size:>8} {1e3 * times['python']:>12.3f} "
              f"{1e3 * times['cython']:>12.3f} {times['python'] / times['cython']:>8.1f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
