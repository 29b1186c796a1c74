from .env import ActionBounds, CorridorEnv
from .observation import Observation, normalize_observation, observe
from .policy import PolicyNet
from .reward import (RewardCoefficients, SINGLE_INTERSECTION_COEFFS,
                     TWO_INTERSECTION_COEFFS, reward)
from .train import (TrainConfig, TrainResult, Trajectory, discounted_returns,
                    ppo_update, train, vpg_update)

__all__ = ["ActionBounds", "CorridorEnv", "Observation",
           "normalize_observation", "observe", "PolicyNet",
           "RewardCoefficients", "SINGLE_INTERSECTION_COEFFS",
           "TWO_INTERSECTION_COEFFS", "reward", "TrainConfig", "TrainResult",
           "Trajectory", "discounted_returns", "ppo_update", "train",
           "vpg_update"]
