def add(a, b):
    """Sum."""
    total = a + b
    return total
