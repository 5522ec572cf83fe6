"""ancsim: a simulation lab for feed-forward active noise control.

Baseline LMS/FxLMS controllers next to modified FxLMS variants that
soft-threshold the secondary signal in the wavelet domain, with
error-driven variable threshold and step size.
"""

__version__ = "0.1.0"
