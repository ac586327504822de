# %% [markdown]
# # Structure groups, tangency and induced pairs
#
# A pair whose fields take values in a subalgebra (sl, so or sp) can be
# flowed either intrinsically or inside gl(n).  The ambient gradient is
# tangent to the subalgebra, so both descriptions agree.  Pushing a pair
# through the adjoint representation gives a new pair whose flow tracks the
# original.
#
# Run with ``python3 demos/03_structure_groups.py`` (about ten seconds).

# %%
import numpy as np

from ymhflow import get_scenario, grad_norm, ymh
from ymhflow.embedding import check_tangency, induce_representation, ymh_intrinsic
from ymhflow.flow import step
from ymhflow.groups import adjoint_rep, descriptor
from ymhflow.higgs import HiggsPair
from ymhflow.torus import make_grid

rng = np.random.default_rng(0)
grid = make_grid(16)


def random_pair(G):
    def field():
        raw = rng.standard_normal((grid.N, grid.N, G.n, G.n)) + 1j * rng.standard_normal((grid.N, grid.N, G.n, G.n))
        spec = np.fft.fft2(raw, axes=(0, 1))
        k = np.fft.fftfreq(grid.N, 1 / grid.N)
        spec[(np.abs(k)[:, None] > 3) | (np.abs(k)[None, :] > 3)] = 0
        return G.project(0.3 * np.fft.ifft2(spec, axes=(0, 1)))
    return HiggsPair.from_arrays(grid, field(), field(), G)


# %% [markdown]
# ## Intrinsic and ambient energies, and the normal part of the gradient

# %%
for name, n in [("SL", 2), ("SO", 3), ("SP", 4)]:
    G = descriptor(name, n)
    p = random_pair(G)
    q = step(p, 1e-3)
    print(f"{name}({n}) dim {G.dim:2d}: YMH intrinsic {ymh_intrinsic(p):.12f} ambient {ymh(p.ambient()):.12f}"
          f"  normal gradient {check_tangency(p):.1e}  off-subalgebra after a step {q.offalg_residual():.1e}")

# %% [markdown]
# ## Adjoint-induced pairs

# %%
s4 = get_scenario("S4").build(grid)
ad = induce_representation(s4, adjoint_rep(s4.group))
print("ad(S4): group", ad.group.name, ad.n, " gradient norm", grad_norm(ad))
s2 = get_scenario("S2").build(grid)
ad2 = induce_representation(s2, adjoint_rep(s2.group))
print(f"S2 energy {ymh(s2):.4f}, ad(S2) energy {ymh(ad2):.4f}")
