"""Approximate incidence reporting with primal-dual uniform grids."""
