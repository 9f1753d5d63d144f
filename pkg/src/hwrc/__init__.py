"""Hardware-efficient randomized compiling: software reference pass, gateware emulator, simulator."""

__version__ = "0.1.0"
