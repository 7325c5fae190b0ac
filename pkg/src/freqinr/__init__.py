"""Arbitrary-scale super-resolution with a local implicit image decoder and an
adaptive DCT-domain frequency loss."""

__version__ = "0.1.0"
