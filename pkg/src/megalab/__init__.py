"""Multi-goal exploration lab: MEGA/OMEGA goal selection on discrete environments."""

__version__ = "0.1.0"
