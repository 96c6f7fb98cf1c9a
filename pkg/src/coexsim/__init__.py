"""Spectrum coexistence toolset: interference evaluation for a macro
network sharing a satellite downlink band, with a context-aware
exclusion-zone control loop, policy engine, persistence, HTTP service,
and experiment CLI."""

__version__ = "0.1.0"
