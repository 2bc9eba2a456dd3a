"""Experiment runner: problem presets, trial loops, benchmarks and result files."""
