"""Variational inequalities over separation oracles.

Convex bodies and correspondences behind strong/weak separation oracles, a
subgradient central-cut ellipsoid engine, certificate-producing VI / QVI /
GQVI / MVI machinery, and the two game-theoretic pipelines built on top
(remedial multi-leader-follower equilibria and total t-resilient Nash).
"""

__version__ = "0.1.0"
