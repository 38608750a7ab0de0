"""
graphbus: brokerless pub/sub over per-process computational graphs.
"""

__version__ = "0.1.0"
