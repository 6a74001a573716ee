"""Solve the default parking-lot instance under both objectives and print
where the processing lands, what it costs, and how long each target waits.

Run:  python3 demos/solve_default.py
"""

from vecop import delaymodel, linkmodel, solver
from vecop.formulation import make_weights
from vecop.scenario import ObjectivePreset, generate_default


def show(tag, result):
    print(f"== {tag} ==")
    print(f"status          {result.status}")
    if result.status != "optimal":
        print(f"reason          {result.infeasible_reason}")
        return
    print(f"total power     {result.total_power:.4f} W")
    print(f"max delay       {result.max_delay * 1e6:.1f} us")
    print(f"objective       {result.objective_value:.6g}")
    for d_id, da in sorted(result.allocation.demands.items()):
        for n in da.serving:
            route = " -> ".join(da.routes[n]) or "(local)"
            print(f"  {d_id}: {da.fractions[n] * 100:5.1f}% on {n:6s} via {route}")
    print()


def main():
    scenario = generate_default(42)
    linkset = linkmodel.build_links(scenario)
    tables = delaymodel.build_tables(scenario, linkset)

    power = solver.solve(scenario, linkset, tables, make_weights(ObjectivePreset.POWER_ONLY))
    show("power only", power)

    delay = solver.solve(
        scenario, linkset, tables, make_weights(ObjectivePreset.CUSTOM, custom=(0.0, 1.0))
    )
    show("delay only", delay)

    if power.status == delay.status == "optimal" and delay.max_delay > 0:
        joint = solver.solve(
            scenario,
            linkset,
            tables,
            make_weights(
                ObjectivePreset.JOINT_EQUAL, pre_solves=(power.total_power, delay.max_delay)
            ),
        )
        show("joint (equal-weighted)", joint)


if __name__ == "__main__":
    main()
