"""Benchmark the compiled kernel extension against the pure-NumPy fallback.

Builds the front-end and transmit-stage subproblems of real scenarios at
their deterministic starting points, then times the three kernel entry
points (``constraint_values``, ``barrier_value``, ``barrier_system``) on
identical inputs under both backends, checking that the outputs agree.

Run from the repository root::

    python3 benchmarks/compare_backends.py [--repeats N] [--seed S]
"""

import argparse
import time

import numpy as np

from wpcmaxmin.backend import get_backend
from wpcmaxmin.channels import generate_channels
from wpcmaxmin.config import desk_config, reference_config
from wpcmaxmin.model import assemble_quadratic_forms
from wpcmaxmin.optimizer import initialize_design
from wpcmaxmin.solver import phase1_feasible
from wpcmaxmin.subproblems import (
    build_irs_subproblem,
    build_relay_matrix_subproblem,
    build_waveform_subproblem,
    front_fixed_quantities,
)
from wpcmaxmin.surrogates import build_front_surrogates, build_waveform_surrogates

KERNELS = ("constraint_values", "barrier_value", "barrier_system")


def scenario_packs(cfg, seed):
    """(stage label, packed subproblem, feasible point) triples.

    The kernels are timed at a strictly feasible interior point, which is
    where the Newton centering loop evaluates them.
    """
    channels = generate_channels(cfg, seed)
    design = initialize_design(channels, cfg)
    forms = assemble_quadratic_forms(design, channels, cfg)
    pack = build_front_surrogates(channels, forms, cfg, design)
    if cfg.mode == "relay":
        front = build_relay_matrix_subproblem(pack, forms, cfg, design.tau)
    else:
        front = build_irs_subproblem(pack, forms, cfg, design.tau)
    fixed = front_fixed_quantities(design, channels, cfg)
    wpack = build_waveform_surrogates(channels, cfg, design, forms=forms)
    wave = build_waveform_subproblem(wpack, cfg, design.tau, fixed)
    out = []
    for stage, pp in [("front", front), ("wave", wave)]:
        x, _, _ = phase1_feasible(pp)
        if x is None:
            raise RuntimeError(f"no interior point for the {stage} stage")
        out.append((stage, pp, center_point(pp, x)))
    return out


def center_point(pp, x, steps=8):
    """Damped Newton steps toward the analytic center.

    Phase one stops just inside the boundary, where the barrier weights
    explode; a few centering steps land on the kind of point the solver
    actually evaluates.
    """
    impl = get_backend("python")
    phi, grad, hess, _ = impl.barrier_system(x, 1.0, pp)
    for _ in range(steps):
        try:
            dx = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            break
        step = 1.0
        while step > 1e-12:
            cand = x + step * dx
            if impl.barrier_value(cand, 1.0, pp) < phi:
                x = cand
                break
            step /= 2.0
        else:
            break
        phi, grad, hess, _ = impl.barrier_system(x, 1.0, pp)
    return x


def call(impl, kernel, pp, x):
    if kernel == "constraint_values":
        return impl.constraint_values(x, pp)
    if kernel == "barrier_value":
        return impl.barrier_value(x, 1.0, pp)
    return impl.barrier_system(x, 1.0, pp)


def time_kernel(impl, kernel, pp, x, repeats):
    for _ in range(3):
        call(impl, kernel, pp, x)
    clock = time.perf_counter()
    for _ in range(repeats):
        call(impl, kernel, pp, x)
    return 1e3 * (time.perf_counter() - clock) / repeats


def max_disagreement(a, b):
    """Largest relative elementwise gap across the kernel's outputs."""
    if isinstance(a, tuple):
        return max(max_disagreement(u, v) for u, v in zip(a[:3], b[:3]))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(a))))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200,
                        help="timed calls per kernel (default 200)")
    parser.add_argument("--seed", type=int, default=0,
                        help="channel seed (default 0)")
    args = parser.parse_args()

    python = get_backend("python")
    try:
        compiled = get_backend("compiled")
    except ImportError:
        compiled = None
        print("compiled extension not built; timing the python backend only")

    # a light energy floor keeps every stage strictly feasible at the
    # deterministic start; kernel cost does not depend on the floor value
    scenarios = [
        ("desk/relay", desk_config("relay", e_min=1e-8)),
        ("desk/surface", desk_config("irs", e_min=1e-8)),
        ("reference/relay", reference_config("relay", e_min=1e-8)),
        ("reference/surface", reference_config("irs", e_min=1e-8)),
    ]
    header = f"{'scenario':18s} {'stage':6s} {'dim':>5s} {'kernel':18s} " \
             f"{'python':>10s}"
    if compiled is not None:
        header += f" {'compiled':>10s} {'speedup':>8s} {'rel diff':>9s}"
    print(header)
    worst = 0.0
    for label, cfg in scenarios:
        for stage, pp, x in scenario_packs(cfg, args.seed):
            for kernel in KERNELS:
                ms_py = time_kernel(python, kernel, pp, x, args.repeats)
                line = f"{label:18s} {stage:6s} {pp.dim:5d} {kernel:18s} " \
                       f"{ms_py:8.3f}ms"
                if compiled is not None:
                    ms_cc = time_kernel(compiled, kernel, pp, x, args.repeats)
                    diff = max_disagreement(call(python, kernel, pp, x),
                                            call(compiled, kernel, pp, x))
                    worst = max(worst, diff)
                    line += f" {ms_cc:8.3f}ms {ms_py / ms_cc:7.1f}x " \
                            f"{diff:9.1e}"
                print(line)
    if compiled is not None:
        print(f"\nlargest relative backend disagreement: {worst:.3e}")


if __name__ == "__main__":
    main()
