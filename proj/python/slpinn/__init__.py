"""Boundary-layer PINN solvers for plane-parallel channel flow.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from ._core import (  # noqa: F401
    Ansatz,
    Jet,
    ShallowNet,
    __version__,
    corrector_norm_slope,
    dz_f1,
    eval_jet,
    f1,
    f2,
    init_net,
    inviscid_rate_slope,
    layered_quadrature,
    load_model,
    minimize,
    omega_exact,
    train_chain,
    u1_exact,
    u1_inviscid,
    u2_exact,
    verify_manufactured,
    weak_limit_deltas,
)
