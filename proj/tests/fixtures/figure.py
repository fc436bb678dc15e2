import os
import sys


class Figure:
    """A figure."""
    dpi: float = 72.0
    name: str = "f"

    def __init__(self, dpi):
        self.dpi = dpi
        self._original_dpi = dpi

    def __setstate__(self, state):
        if "_dpi" in state:
            state["_dpi"] = state.get("_original_dpi", state["_dpi"])
        self.__dict__ = state
        return None


def helper(x):
    return x + 1


def render(fig):
    total = 0
    for i in range(3):
        total += helper(i)
    if fig.dpi > 100:
        total *= 2
    return total
