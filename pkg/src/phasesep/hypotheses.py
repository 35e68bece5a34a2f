"""Combined admissibility checks for a run configuration: potential
structure, noise degeneracy and summability, the degeneracy-order floor
s0 >= d*s_F - 1, and the dimension-dependent separation thresholds."""

from __future__ import annotations

from .config import RunConfig
from .ensemble import make_noise, make_potential
from .noise import constants, tail_increment, taylor_bound_check
from .potential import CheckResult, PotentialConstants, check_potential_hypotheses

# Separation needs s0 > 2 in d = 1 (gradient-space variant) and d = 2, and
# s0 > 6 in d = 3.
SEPARATION_FLOOR = {1: 2, 2: 2, 3: 6}


def run_hypothesis_checks(cfg: RunConfig) -> list[CheckResult]:
    p = make_potential(cfg)
    pc = PotentialConstants.for_potential(p)
    results = check_potential_hypotheses(p, pc)

    family = make_noise(cfg)
    endpoints = max(abs(float(family.h(k, x)))
                    for k in (0, family.K - 1) for x in (-1.0, 1.0))
    results.append(CheckResult(
        "noise_vanishes_at_barriers", endpoints == 0.0,
        {"max_endpoint_value": endpoints},
    ))

    tail = tail_increment(family)
    results.append(CheckResult(
        "noise_square_summable", family.gamma > 0.5,
        {"gamma": family.gamma, "sigma_sq_sum": family.sigma_sq_sum(),
         "next_decade_increment": tail},
    ))

    nc = constants(family, p)
    results.append(CheckResult(
        "noise_constants_finite", True, {"c1": nc.c1, "c2": nc.c2},
    ))

    results.append(taylor_bound_check(family, 0))

    floor = cfg.d * pc.s_f - 1
    results.append(CheckResult(
        "degeneracy_order_floor", cfg.s0 >= floor,
        {"s0": cfg.s0, "required": floor, "d": cfg.d, "s_f": pc.s_f},
    ))

    threshold = SEPARATION_FLOOR[cfg.d]
    results.append(CheckResult(
        "separation_threshold", cfg.s0 > threshold,
        {"s0": cfg.s0, "required_exclusive": threshold, "d": cfg.d},
    ))
    return results


def all_passed(results: list[CheckResult]) -> bool:
    return all(r.passed for r in results)


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "pass" if r.passed else "FAIL"
        detail = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                           for k, v in r.measured.items())
        lines.append(f"  {r.name:<{width}}  {status}  {detail}")
    return "\n".join(lines)
