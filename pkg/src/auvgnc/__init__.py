"""Miniature-AUV GNC simulator with auto-tuned quaternion UKF navigation."""

__version__ = "0.1.0"
