"""Regenerate the frozen oracle outputs in ``tests/data``.

Run from the repository root: ``python3 tests/make_frozen.py``.  The files
are committed; tests only read them.
"""
import json
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).parent))
import oracles  # noqa: E402

DATA = pathlib.Path(__file__).parent / "data"


def main():
    DATA.mkdir(exist_ok=True)
    rng = np.random.default_rng(20240601)
    cases = []
    for _ in range(200):
        spec = oracles.random_milp_spec(rng)
        cases.append({"spec": spec, "optimum": oracles.enumerate_milp(spec)})
    (DATA / "milp_cases.json").write_text(json.dumps(cases, indent=1) + "\n")

    fig2 = oracles.fig2_oracle()
    (DATA / "fig2_oracle.json").write_text(json.dumps(fig2, indent=1) + "\n")

    rng = np.random.default_rng(77)
    tiny = []
    for _ in range(100):
        inst = oracles.random_tiny_instance(rng)
        tiny.append({"instance": inst, "oracle_cost": oracles.single_path_oracle(inst)})
    (DATA / "tiny_cases.json").write_text(json.dumps(tiny, indent=1) + "\n")
    feasible = sum(t["oracle_cost"] is not None for t in tiny)
    infeasible = sum(c["optimum"] is None for c in cases)
    print(f"milp cases: {len(cases)} ({infeasible} infeasible); fig2 optimum {fig2['objective']} "
          f"({len(fig2['optima'])} optima); tiny: {feasible}/100 oracle-feasible")


if __name__ == "__main__":
    main()
