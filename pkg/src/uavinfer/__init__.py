"""Distributed CNN inference planning for UAV swarms.

Per time frame the planner chooses UAV positions, transmit powers and a
layer-to-UAV assignment for every classification request so that the
end-to-end latency is small and every link stays reliable.
"""

__version__ = "0.1.0"
