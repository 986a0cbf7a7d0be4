"""Simulation harness: message ledger, instance generators, baselines and experiment runner."""
