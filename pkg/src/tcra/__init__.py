"""Two-layer coded channel access over the binary adder channel with erasures."""

__version__ = "0.1.0"
