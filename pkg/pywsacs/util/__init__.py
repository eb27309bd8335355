"""
General helpers: output writers, fingerprints, pi-expression parsing and
statistics.
"""

from .expressions import PiRational, parse_float_expression, parse_pi_rational
from .tools import dumps_json, fingerprint, full_path, write_csv, write_json

__all__ = [
    "PiRational",
    "dumps_json",
    "fingerprint",
    "full_path",
    "parse_float_expression",
    "parse_pi_rational",
    "write_csv",
    "write_json",
]
