#!/usr/bin/env python3
"""Print the multiply-add cost of every published schedule preset.

The constant baselines anchor the comparison: each evolving schedule for the
same task runs at a small fraction of the equal-max-hidden constant cost.
"""

import argparse

from longmem.schedule import PRESETS, build_preset, cost_multiply_adds

BASELINES = {"lm": "lm-baseline", "seqrec": "seqrec-baseline"}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.parse_args()
    header = f"{'preset':<18} {'len':>5} {'max_n':>6} {'multiply_adds':>14} {'vs baseline':>12}"
    print(header)
    print("-" * len(header))
    for name in PRESETS:
        schedule = build_preset(name)
        cost = cost_multiply_adds(schedule)
        family = name.split("-")[0]
        base_cost = cost_multiply_adds(build_preset(BASELINES[family]))
        print(
            f"{name:<18} {schedule.total_length:>5} {schedule.max_hidden:>6} "
            f"{cost:>14} {cost / base_cost:>11.1%}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
