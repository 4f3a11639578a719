"""Placeholder, implemented later in the build."""
ResidualEvaluator = None
