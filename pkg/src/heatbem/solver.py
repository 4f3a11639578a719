"""Placeholder, implemented later in the build."""
Density = solve_galerkin = hh2_estimate = None
