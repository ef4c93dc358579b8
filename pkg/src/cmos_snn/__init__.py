"""Behavioural simulator of a CMOS spiking neural network.

LIF neurons with a Schmitt-trigger threshold, memristive STDP synapses in a
15x6 crossbar with winner-take-all readout, and a BCM-mode heart-rate
classifier built from the same STDP circuit.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
