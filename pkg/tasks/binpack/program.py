"""Machine-priority heuristic for online job placement."""


# EVOLVE-BLOCK-START
def priority(required, free):
    """Higher is better. Starts as best fit on cpu."""
    return -(free.cpu - required.cpu)
# EVOLVE-BLOCK-END
