"""Time-aware distant supervision for relation extraction.

Rule-matched relation instances are weighted by how concentrated their
mentions are in time, and the weights drive hard filtering or a
curriculum over nested training sets.
"""

__version__ = "0.1.0"
