"""Placeholder, implemented later in the build."""
AdaptiveConfig = ConvergenceRecord = run_adaptive = mark = fit_rate = None
