"""Max-min rate optimization for wireless-powered pairs served by an
amplify-and-forward relay or an active reflecting surface."""

__version__ = "0.1.0"
