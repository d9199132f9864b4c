"""Compare the compiled quadrature kernels against the pure-Python
fallback on the hot paths: rate evaluation, threshold solving, and one
full empirical tight-control pass.

Run:  python3 benchmarks/bench_backends.py
"""
import json
import os
import subprocess
import sys
import time

_CHILD_FLAG = "_SIGNGATE_BENCH_CHILD"


def run_cases() -> dict:
    import numpy as np

    import signgate as sg
    from signgate.error_rates import AcceptanceRegion, rate_triple
    from signgate.procedures import _tco_solve, tce_procedure

    rng = np.random.default_rng(2024)
    G_ald = sg.AsymmetricLaplace(0.0, 0.15, 0.3)
    G_chisq = sg.ShiftedChiSq(3.0, 3.0).scaled(0.5)
    G_mix = sg.SpikeSlab(
        sg.AsymmetricLaplace(0.0, 0.1, 0.5),
        (sg.Interval(-4.0, -2.0), sg.Interval(2.0, 4.0)),
        0.01,
    )
    region = AcceptanceRegion(0.05, 0.5)
    theta = G_ald.sample(rng, 5000)
    y = theta + rng.standard_normal(5000)

    def bench(fn, repeat=5) -> float:
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        return best

    def tce_cold():
        _tco_solve.cache_clear()
        tce_procedure(y, 0.1)

    cases = {
        "rate_triple ald": lambda: rate_triple(G_ald, region),
        "rate_triple chisq": lambda: rate_triple(G_chisq, region),
        "rate_triple spike-slab": lambda: rate_triple(G_mix, region),
        "tco solve (cold)": lambda: _tco_solve.__wrapped__(G_ald, 0.1, 1e-9),
        "tce replicate m=5000": tce_cold,
    }
    return {
        "backend": sg.backend_name(),
        "times": {name: bench(fn) for name, fn in cases.items()},
    }


def main() -> int:
    if os.environ.get(_CHILD_FLAG):
        print(json.dumps(run_cases()))
        return 0

    results = {}
    for label, extra in (("c", {}), ("python", {"SIGNGATE_PURE_PYTHON": "1"})):
        env = dict(os.environ, **extra, **{_CHILD_FLAG: "1"})
        if label == "c":
            env.pop("SIGNGATE_PURE_PYTHON", None)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        results[label] = payload
        if payload["backend"] != label:
            print(f"note: requested {label!r} backend, got {payload['backend']!r}")

    c_times = results["c"]["times"]
    py_times = results["python"]["times"]
    width = max(len(name) for name in c_times)
    print(f"{'case'.ljust(width)}  {'compiled':>10}  {'python':>10}  {'speedup':>8}")
    for name in c_times:
        tc, tp = c_times[name], py_times[name]
        print(f"{name.ljust(width)}  {tc * 1e3:>9.2f}ms  {tp * 1e3:>9.2f}ms  {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
