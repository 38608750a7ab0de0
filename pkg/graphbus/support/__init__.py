"""Runtime support: parameter server and time system."""

from graphbus.support.params import ParameterStore, load_params
from graphbus.support.clock import TimeSystem

__all__ = ["ParameterStore", "load_params", "TimeSystem"]
