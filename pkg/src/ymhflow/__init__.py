"""Yang-Mills-Higgs gradient flow of Higgs pairs on the flat unit torus.

The package is organised bottom-up:

``torus``
    Periodic grid, spectral derivatives and typed matrix-valued fields.
``groups`` and ``embedding``
    Structure-group subalgebras of ``gl(n)``, representations and the
    tangency of the ambient gradient to a subalgebra.
``higgs``
    Higgs pairs, the moment density, the YMH energy and its descent field,
    the Higgs residual and holomorphic-section counting.
``flow``
    RK4 and exponential-Euler integrators with monitors and traces.
``limits``
    Slope vectors of limits and verdicts against expected types.
``scenarios``
    The catalogue of initial pairs.
``persist``, ``verify`` and ``cli``
    Checkpoints, configurations, self-checks and ``python -m ymhflow``.
"""
from .errors import (
    CheckpointError,
    GridError,
    InvalidDescriptor,
    KindError,
    NonConvergence,
    NoSpectralGap,
    NotCritical,
    NotInSubalgebra,
    NumericalFailure,
    YMHError,
)
from .torus import (
    Kind,
    MatrixField,
    SectionField,
    TorusGrid,
    adjoint_field,
    commutator,
    d_z,
    d_zbar,
    dealias,
    hodge_star,
    inner,
    make_grid,
    norm2,
)
from .groups import (
    GroupDescriptor,
    Representation,
    adjoint_rep,
    descriptor,
    inclusion_rep,
    split_field,
)
from .higgs import (
    HiggsPair,
    MomentField,
    chern_moment,
    grad_norm,
    higgs_residual,
    holo_section_count,
    near_kernel_projection,
    project_to_higgs,
    ymh,
    ymh_gradient,
)
from .embedding import check_tangency, induce_representation, ymh_intrinsic
from .flow import FlowConfig, FlowTrace, StopReason, flow_invariant_report, run_flow
from .limits import LimitReport, Verdict, classify, hn_type
from .scenarios import Scenario, catalog, get_scenario
from .persist import RunConfig, load_checkpoint, load_config, save_checkpoint

__version__ = "0.1.0"
