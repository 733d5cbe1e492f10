"""ramkit - Regionally Additive Models 工具包"""

__version__ = "0.1.0"

__all__ = ["__version__"]
