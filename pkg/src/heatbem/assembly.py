"""Placeholder, implemented later in the build."""
ProblemSpec = GalerkinSystem = assemble_system = QuadConfig = None
