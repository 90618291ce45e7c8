"""
Modules package for the Oscillator SAT Toolbox.
Formula tooling, clause kernels, both oscillator systems, the SDE integrator and readout.
"""
