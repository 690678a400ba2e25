"""Deterministic matrix-completion lab: cut metrics, graphon limits and nuclear-norm recovery."""
