# %% [markdown]
# # A degree-one line subbundle and its transient plateau
#
# Scenario S5 is the trivial rank-2 bundle with holomorphic structure chosen
# so that a degree-one line bundle L sits inside it: the image of a smooth
# projector P built from a bump map of degree one.  The bundle is
# L + L^(-1), so its critical level is YMH = 2 pi^2 with moment eigenvalues
# (pi, -pi).
#
# On the grid the flow first settles onto that level, then leaves it and
# decays towards the flat connection.  The script prints both phases.
#
# Run with ``python3 demos/02_degree_one_bundle.py [N] [t_max]``.  The
# defaults (N = 32, t_max = 3) take a few minutes on one core.

# %%
import sys

import numpy as np

from ymhflow import FlowConfig, get_scenario, holo_section_count, run_flow
from ymhflow.errors import NoSpectralGap
from ymhflow.limits import KAPPA, moment_spectrum
from ymhflow.scenarios import bump_projector, chern_number
from ymhflow.torus import make_grid

N = int(sys.argv[1]) if len(sys.argv) > 1 else 32
t_max = float(sys.argv[2]) if len(sys.argv) > 2 else 3.0
grid = make_grid(N)

P = bump_projector(grid, d=1)
print("first Chern number of im P:", round(chern_number(P), 6))
pair = get_scenario("S5").build(grid)
try:
    print("holomorphic sections of the initial bundle:", holo_section_count(pair.alpha))
except NoSpectralGap as exc:
    # the bump is too coarsely resolved below N = 32 to separate the section
    print("no clear section count on this grid:", exc)

# %% [markdown]
# ## The flow, sampled every 0.25 time units

# %%
print(f"{'t':>6} {'YMH':>12} {'YMH/2pi^2':>10} {'slopes':>20}")
state, t, k = pair, 0.0, 0
while t < t_max - 1e-12:
    T = min(t + 0.25, t_max)
    state, trace, reason = run_flow(state, FlowConfig(t_max=T, tol_grad=1e-5, monitor_every=10**6),
                                    t0=t, step0=k, reference=pair)
    t, k = float(trace.last["t"]), int(trace.last["step"])
    means, _ = moment_spectrum(state)
    e = trace.last["ymh"]
    print(f"{t:6.2f} {e:12.6f} {e / (2 * np.pi**2):10.5f} {str(np.round(means / KAPPA, 4)):>20}")
    if reason.value == "Converged":
        break
