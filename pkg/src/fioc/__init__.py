"""Desk-scale factored interactive object-centric world models.

Subpackages:
    numkit       dense/recurrent cells with analytic gradients, Adam, CEM
    env          2-D bounded arena simulator with contact interaction graphs
    wm           factored latent world model and its training loop
    interaction  graph inference regimes (variational, codebook, CIT) + nSHD
    policy       hierarchical interaction-centric control (MPC / PPO)
    cli          experiment commands and report emission
"""

__version__ = "0.1.0"
