"""Energy minimization with hierarchical quadrilateral finite elements."""

__version__ = "0.1.0"
