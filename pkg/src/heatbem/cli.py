"""Placeholder, implemented later in the build."""
problem_catalog = None
def main(argv=None):
    raise NotImplementedError
