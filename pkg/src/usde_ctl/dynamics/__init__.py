from .model import (
    FRANKA_TAU_LIMITS,
    DimensionError,
    DynamicsTerms,
    LinkParams,
    ManipulatorModel,
    NonFiniteError,
    as_joint_vector,
    eval_coriolis_matrix,
    eval_gravity,
    eval_mass_matrix,
    forward_dynamics,
    franka_like_chain,
    kinetic_energy,
    planar_two_link,
)

__all__ = [
    "FRANKA_TAU_LIMITS",
    "DimensionError",
    "DynamicsTerms",
    "LinkParams",
    "ManipulatorModel",
    "NonFiniteError",
    "as_joint_vector",
    "eval_coriolis_matrix",
    "eval_gravity",
    "eval_mass_matrix",
    "forward_dynamics",
    "franka_like_chain",
    "kinetic_energy",
    "planar_two_link",
]
