"""
Numerics, environments, learners, oracles and experiment plumbing.
Nothing here imports click; commands and tests call these modules directly.
"""
