"""presence-hub: workplace presence awareness with opt-in collection.

Pluggable sensor aggregators report evidence about workers; the central
server enforces per-user opt-in at admission, fuses evidence by degrading
resolution (reporting only what the evidence directly supports), and streams
per-worker presence states plus status messages to dashboard clients.
"""

__version__ = "0.1.0"
