"""Probability that a designated candidate is a Condorcet (or alpha-) winner
under independent cultures, computed exactly, by simulation and by
saddle-point asymptotics."""
