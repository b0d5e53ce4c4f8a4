"""Experiment orchestration, fitting and the command line interface."""
