"""Drift controller: planar vehicle simulator, guidance, rewards and a soft actor-critic learner."""

__version__ = "0.1.0"
