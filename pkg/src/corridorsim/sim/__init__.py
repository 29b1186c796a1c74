from .engine import Arrival, SimClock, Simulation, SimulationFault
from .idm import DEFAULT_IDM, IdmParams, idm_accel
from .network import CorridorNetwork, SignalProgram, SignalState, signal_state
from .record import EpisodeRecord
from .vehicle import Vehicle, VehicleClass

__all__ = ["Arrival", "SimClock", "Simulation", "SimulationFault",
           "DEFAULT_IDM", "IdmParams", "idm_accel", "CorridorNetwork",
           "SignalProgram", "SignalState", "signal_state", "EpisodeRecord",
           "Vehicle", "VehicleClass"]
