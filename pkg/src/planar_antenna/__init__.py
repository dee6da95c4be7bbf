"""Planar dielectric antenna simulator."""
