"""Flatness-preserving lower-triangular coupling of pure-feedback subsystems.

The library builds the joint flatness diffeomorphism of coupled subsystems
from jets of their flat outputs and turns it into distributed tracking
controllers.  The simulator flies planar quadrotors through each other's
downwash.
"""

from .control import FlatPoint, distributed_control_step, lqr_gain, make_gains
from .downwash import DownwashParams, drag_force, drag_torque
from .errors import (
    ConfigError,
    DomainError,
    FlatCouplingError,
    InformationContractError,
    OrderingError,
    SingularInverseError,
    SingularJetError,
    SynthesisError,
)
from .flatness import build_joint_diffeo, forward_flat_state
from .graph import CouplingGraph, ancestors, build_graph, info_set, k_hop_in_neighbors
from .jets import Jet
from .plant import (
    ApproximateDownwashCoupling,
    DownwashCoupling,
    NominalCoupling,
    PlanarQuadrotor,
    QuadParams,
    joint_dynamics,
)
from .sim import ScenarioConfig, run, sweep_threshold

__version__ = "0.1.0"
