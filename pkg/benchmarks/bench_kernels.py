"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20] [--step] [--json out.json]

Times each row-wise kernel on transformer-shaped inputs, checks that both
backends agree, and with ``--step`` also times one full training step of the
default model under each backend.
"""
import argparse
import json
import time

import numpy as np

from afford.tensor import kernels
from afford.tensor.kernels import _fallback


def timeit(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def kernel_cases(rng):
    # shapes seen in a batch-8 forward: 8*8*16 tokens of width 128, MLP width 512,
    # attention rows over 1024 keys
    tokens = rng.normal(size=(1024, 128)).astype(np.float32)
    hidden = rng.normal(size=(1024, 512)).astype(np.float32)
    scores = rng.normal(size=(4096, 1024)).astype(np.float32)
    gamma = np.ones(128, np.float32)
    beta = np.zeros(128, np.float32)
    probs = _fallback.softmax_fwd(scores)
    _, xhat, rstd = _fallback.layernorm_fwd(tokens, gamma, beta, 1e-5)
    return {
        "gelu_fwd": (hidden,),
        "gelu_bwd": (hidden, hidden),
        "softmax_fwd": (scores,),
        "softmax_bwd": (probs, scores),
        "layernorm_fwd": (tokens, gamma, beta, 1e-5),
        "layernorm_bwd": (tokens, xhat, rstd, gamma),
    }


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, np.float64) - np.asarray(b, np.float64))))


def bench_kernels(repeat):
    from afford.tensor.kernels import _native

    rng = np.random.default_rng(0)
    rows = []
    for name, args in kernel_cases(rng).items():
        py_fn, nat_fn = getattr(_fallback, name), getattr(_native, name)
        py_ms = timeit(py_fn, args, repeat)
        nat_ms = timeit(nat_fn, args, repeat)
        rows.append({"kernel": name, "python_ms": py_ms, "native_ms": nat_ms,
                     "speedup": py_ms / nat_ms, "max_abs_diff": max_diff(py_fn(*args), nat_fn(*args))})
    return rows


def bench_step(repeat, batch_size):
    from afford.flow import DropPolicy, collate, train_step
    from afford.model import ModelConfig, VideoTransformer
    from afford.tensor import AdamState
    from afford.world import WorldConfig
    from afford.world.dataset import generate

    samples = [s for _, _, ss in generate(WorldConfig(n_scenes=4), 0) for s in ss][:batch_size]
    batch = collate(samples)
    out = {}
    for backend in kernels.available_backends():
        kernels.use_backend(backend)
        model = VideoTransformer(ModelConfig(), seed=0)
        opt = AdamState(lr=1e-4)
        out[backend] = timeit(lambda: train_step(model, batch, DropPolicy(), opt, 0), (), repeat)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--step", action="store_true", help="also time a full training step")
    ap.add_argument("--batch-size", type=int, default=8)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)

    if "native" not in kernels.available_backends():
        raise SystemExit("compiled kernels are not built; run `python setup.py build_ext --inplace`")
    initial = kernels.BACKEND
    result = {"kernels": bench_kernels(args.repeat)}
    print(f"{'kernel':15s} {'python ms':>10s} {'native ms':>10s} {'speedup':>8s} {'max diff':>9s}")
    for r in result["kernels"]:
        print(f"{r['kernel']:15s} {r['python_ms']:10.2f} {r['native_ms']:10.2f} "
              f"{r['speedup']:7.1f}x {r['max_abs_diff']:9.1e}")
    if args.step:
        result["train_step_ms"] = bench_step(max(1, args.repeat // 10), args.batch_size)
        kernels.use_backend(initial)
        for backend, ms in result["train_step_ms"].items():
            print(f"train step (batch {args.batch_size}, {backend}): {ms:.0f} ms")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(result, f, indent=1)


if __name__ == "__main__":
    main()
