"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each row is the best-of-N wall time per call for both backends on inputs
shaped like the acceptance-scale run (64 px inputs, batch 32), followed by
one full training step (loss and gradients) with every kernel swapped.
"""

import argparse
import math
import time

import numpy as np

from bodycomp import kernels
from bodycomp.imageio import Image
from bodycomp.nnet import ArchitectureSpec, init_model, loss_and_grads, stack_samples
from bodycomp.preprocess import PreprocessedSample


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    x = rng.normal(size=(4, 32, 64, 64))
    cols = rng.normal(size=(4 * 9, 32 * 64 * 64))
    pool_in = rng.normal(size=(32, 8, 64, 64))
    dout = rng.normal(size=(32, 8, 32, 32))
    photo = rng.integers(0, 256, size=(180, 160, 3), dtype=np.uint8)
    face = rng.uniform(0, 255, size=(64, 64))
    xs = np.sort(rng.normal(size=2000))
    ys = rng.normal(size=2000)

    def cases(mod):
        _, idx = mod.maxpool2_forward(pool_in)
        return {
            "im2col 4x32x64x64 k3": lambda: mod.im2col(x, 3),
            "col2im 4x32x64x64 k3": lambda: mod.col2im(cols, 4, 32, 64, 64, 3),
            "maxpool2_forward 32x8x64x64": lambda: mod.maxpool2_forward(pool_in),
            "maxpool2_backward 32x8x32x32": lambda: mod.maxpool2_backward(dout, idx, 64, 64),
            "resize_bilinear 180x160x3 -> 64": lambda: mod.resize_bilinear(photo, 64, 64),
            "rotate_bilinear 64x64": lambda: mod.rotate_bilinear(face, math.radians(7.0)),
            "split_scan n=2000": lambda: mod.split_scan(xs, ys, 5),
        }

    return cases


def training_step(rng):
    arch = ArchitectureSpec(image_side=64, conv_channels=(4, 8, 16))
    model = init_model(arch, 0)
    samples = []
    for i in range(32):
        imgs = [Image.from_array(rng.integers(0, 256, size=(64, 64), dtype=np.uint8)) for _ in range(5)]
        samples.append(PreprocessedSample(str(i), imgs[0], imgs[1:], rng.normal(size=7), (25.0, 25.0), 165.0, 63.0, 40.0))
    batch = stack_samples(samples)
    return lambda: loss_and_grads(model, batch, (1.0, 1.0))


def use_backend(mod):
    for name in kernels._NAMES:
        setattr(kernels, name, getattr(mod, name))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    try:
        compiled = kernels.backend_module("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    fallback = kernels.backend_module("python")

    cases = kernel_cases(rng)
    fast, slow = cases(compiled), cases(fallback)
    rows = [(name, best_time(fast[name], args.repeat), best_time(slow[name], args.repeat)) for name in fast]
    step = training_step(rng)
    original = {name: getattr(kernels, name) for name in kernels._NAMES}
    try:
        use_backend(compiled)
        t_fast = best_time(step, args.repeat)
        use_backend(fallback)
        t_slow = best_time(step, args.repeat)
    finally:
        for name, fn in original.items():
            setattr(kernels, name, fn)
    rows.append(("training step, batch 32 at 64 px", t_fast, t_slow))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'cython ms':>10}  {'python ms':>10}  {'speedup':>8}")
    for name, a, b in rows:
        print(f"{name:<{width}}  {a * 1e3:10.3f}  {b * 1e3:10.3f}  {b / a:7.2f}x")


if __name__ == "__main__":
    main()
