"""Cognitive scaling of ultrasonic sensing waveforms for a shared speaker mixer."""

from .signal import PCM_MAX, SensingSpec, WindowSpec

__all__ = ["PCM_MAX", "SensingSpec", "WindowSpec"]
__version__ = "0.1.0"
