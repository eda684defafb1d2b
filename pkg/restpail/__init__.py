"""restpail: the Restrained-Paillier cryptosystem and its two-party protocols."""

__version__ = "0.1.0"
