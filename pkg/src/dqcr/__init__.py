"""Simulator and RL trainer for routing circuits on multi-module quantum hardware."""

from .config import EnvConfig, RewardConfig, TimingConfig, TrainSchedule
from .dag import CircuitDag, Gate, build_dag, load_circuit, save_circuit
from .env import EMPTY, EPR_HALF, InfeasibleActionError, RoutingEnv, encode_state
from .hardware import (
    CouplingGraph,
    PathTable,
    build_grid_pair,
    build_guadalupe_pair,
    build_topology,
    build_twin_square_pair,
    frontier_distance,
)
from .actions import BaselineActionSpace, RoutActionSpace, build_action_space, make_env

__version__ = "0.1.0"
