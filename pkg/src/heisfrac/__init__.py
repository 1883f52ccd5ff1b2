"""Fractional integrals of Zygmund type on the Heisenberg group, discretised on grids."""
