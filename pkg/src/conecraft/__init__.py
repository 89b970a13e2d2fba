"""Hard linear-inequality constraints on network activations via cone generators."""
__version__ = "0.1.0"
