"""Coupled-channel scattering engine for static-field shielding of
ultracold polar rigid-rotor molecules."""

__version__ = "0.1.0"
