"""Toolkit for detecting browser-embedded miners and attributing mined
blocks in a CryptoNote-style blockchain to a mining pool."""

__version__ = "0.1.0"
