"""Discrete-event simulator for Wireless Access and Backhaul (WAB) relay nodes."""

from importlib import resources

__version__ = "0.1.0"


def scenario_path(name: str):
    """Path to a shipped reference scenario (``vehicular`` or ``o2i``)."""
    return resources.files("wabsim") / "scenarios" / f"{name}.json"
