"""Miniature MOBA sandbox: demos, goal prediction, goal-guided self-play RL,
and policy-diversity metrics, reproducible end to end from a config + seed."""

__version__ = "0.1.0"
