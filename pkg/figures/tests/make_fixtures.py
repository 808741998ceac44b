"""Regenerate the committed CSV fixtures from tiny-scale harness runs.

Run manually (needs the shotvqe package installed):

    python figures/tests/make_fixtures.py

The grids are deliberately minimal: the fixtures exercise the documented file
layout, not the physics.
"""
from pathlib import Path

DATA = Path(__file__).parent / "data"

TINY = """
[lattice]
l1 = 2
l2 = 2
boundary1 = periodic
boundary2 = periodic
[optimizer]
max_steps = 60
window = 15
tail = 15
restarts = 2
[thermal]
chain_length = 800
burn_in_fraction = 0.25
thinning = 4
[sweep]
ns_grid = 2,4,8,16
eta_grid = 0.05,0.1,0.2,0.3
beta_grid = 0.5,2.0,8.0,32.0
l_grid = 1,2
depth_grid = 2,4
j2_grid = 0.0,0.4
[run]
seed = 77
log_every = 20
"""


# The length sweep needs a bracketed variance peak for the critical-point
# table, so it runs at 2x4 with a wider shot grid than the other fixtures.
FIG1EF = """
[lattice]
l1 = 2
l2 = 4
boundary1 = open
boundary2 = periodic
[optimizer]
max_steps = 900
window = 120
tail = 250
restarts = 2
[sweep]
l_grid = 2
ns_grid = 1,2,4,8,16,32
[run]
seed = 77
log_every = 20
"""


def main():
    from shotvqe.scenarios import run_scenario, scenario_config

    names = ["fig1a", "fig1c", "fig1d", "fig1ef", "fig2a", "fig2b", "fig3a",
             "fig3bc", "appC", "appD", "appE"]
    for name in names:
        overlay = TINY
        if name == "fig1ef":
            overlay = FIG1EF
        elif name == "fig3a":
            # The gap-scaling systems are fixed; only shrink the runs.
            overlay = TINY.replace("ns_grid = 2,4,8,16", "ns_grid = 8,16,32,64")
        cfg = scenario_config(name, overlay)
        print(f"generating {name} ...")
        run_scenario(name, cfg, DATA)
    print("fixtures written to", DATA)


if __name__ == "__main__":
    main()
