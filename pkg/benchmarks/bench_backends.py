"""Timing comparison of the compiled core against the numpy fallback.

Run directly:  python benchmarks/bench_backends.py

The dispatcher in npi._backend routes integer exponents to the typed
loops and fractional exponents to numpy; the table shows why.
"""

import time

import numpy as np

from npi import _backend


def _time(fn, *args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.Generator(np.random.Philox(key=11))
    compiled = _backend.backend_name() == "compiled"
    print(f"active backend: {_backend.backend_name()}")
    header = (f"{'kernel':<16}{'n':>9}{'p':>6}{'numpy (ms)':>12}"
              f"{'typed (ms)':>12}{'typed/numpy':>13}{'dispatch':>10}")
    print(header)
    print("-" * len(header))
    for n in (10**5, 10**6):
        w = rng.random(n)
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        cases = [("power_diff_sum", _backend.power_diff_sum_py,
                  getattr(_backend._core, "power_diff_sum", None) if compiled else None,
                  (w, a, b)),
                 ("power_sum", _backend.power_sum_py,
                  getattr(_backend._core, "power_sum", None) if compiled else None,
                  (w, a))]
        for name, py_fn, c_fn, args in cases:
            for p in (1.0, 2.0, 2.5, 3.0):
                t_py = _time(py_fn, *args, p)
                if c_fn is not None:
                    t_c = _time(c_fn, *args, p)
                    ratio = f"{t_py / t_c:11.2f}x"
                    t_c_ms = f"{1e3 * t_c:10.3f}"
                else:
                    ratio, t_c_ms = f"{'-':>12}", f"{'-':>10}"
                chosen = "typed" if (compiled and p in _backend._TYPED_EXPONENTS) else "numpy"
                print(f"{name:<16}{n:>9}{p:>6.1f}{1e3 * t_py:>12.3f}"
                      f"{t_c_ms:>12}{ratio:>13}{chosen:>10}")
    if not compiled:
        print("\ncompiled core not built; only the fallback was timed")


if __name__ == "__main__":
    main()
