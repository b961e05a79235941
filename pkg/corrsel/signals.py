class SKIP(Exception):
    """A candidate or a study has nothing to contribute and is left out."""
