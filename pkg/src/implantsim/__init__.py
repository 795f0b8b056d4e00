"""Simulation toolkit for RF-powered, battery-free medical implants."""

__version__ = "0.1.0"
