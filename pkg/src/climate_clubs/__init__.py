"""Agent-based climate-club negotiation on a DICE-style climate-economy core."""

from .clubs import ClubParams
from .config import SimConfig, load_config
from .dynamics import DynamicsParams
from .harness import run_episode, run_experiment, step_episode
from .policies import ActionBounds
from .scenarios import load_calibration, rank_regions
from .state import ValidationError, new_world

__version__ = "0.1.0"
