"""Small shared helpers."""


def ffmt(x) -> str:
    """Shortest decimal representation that round-trips a float64."""
    return repr(float(x))
