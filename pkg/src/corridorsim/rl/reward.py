"""Composite speed reward balancing emergency progress against traffic flow.

Three mutually exclusive cases, checked in this order:

  C. same lane or no emergency vehicle        -> v_cav
  A. emergency vehicle ahead, different lane  -> nu1*v_ev + nu2*v_cav
  B. emergency vehicle behind                 -> nu3*v_ev + nu4*v_cav

``same_lane_regularization`` switches case B on for same-lane states where
the emergency vehicle trails the CAV, a variant that discourages
accelerating into it right after its merge.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RewardCoefficients:
    nu1: float
    nu2: float
    nu3: float
    nu4: float

    def __post_init__(self):
        for name in ("nu1", "nu2", "nu3", "nu4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


SINGLE_INTERSECTION_COEFFS = RewardCoefficients(nu1=0.1, nu2=0.9, nu3=0.0, nu4=1.0)
TWO_INTERSECTION_COEFFS = RewardCoefficients(nu1=1.0, nu2=0.6, nu3=1.0, nu4=1.0)


def reward(v_cav: float, p_cav: float, l_cav: int,
           v_ev: float = 0.0, p_ev: float = 0.0, l_ev: int = 0,
           ems_present: bool = False,
           coeffs: RewardCoefficients = SINGLE_INTERSECTION_COEFFS,
           same_lane_regularization: bool = False) -> float:
    if not ems_present:
        return v_cav
    if same_lane_regularization:
        if p_cav - p_ev > 0.0:
            return coeffs.nu3 * v_ev + coeffs.nu4 * v_cav
        if l_ev != l_cav:
            return coeffs.nu1 * v_ev + coeffs.nu2 * v_cav
        return v_cav
    if l_ev == l_cav:
        return v_cav
    if p_cav - p_ev <= 0.0:
        return coeffs.nu1 * v_ev + coeffs.nu2 * v_cav
    return coeffs.nu3 * v_ev + coeffs.nu4 * v_cav
