"""Radio network simulator with MIS, exponential-shift clustering, Compete,
broadcast and leader election."""

__version__ = "0.1.0"
