"""Constellation-shaped, bit-interleaved LDPC-coded APSK over AWGN.

Subpackages cover the transmit chain and iterative receiver (`txrx`), APSK
geometry and shaping partitions (`constellation`), minimal-weight shaping
codes (`shaping`), eIRA LDPC codes (`ldpc`), the MAP demapper (`demod`),
information rates and joint parameter optimization (`infotheory`), and
EXIT-chart code design (`exitlab`).
"""

__version__ = "0.1.0"

from .constellation import build_apsk, papr_db, shaped_pmf, shaping_strategy, with_pmf
from .shaping import build_shaping_code
from .ldpc import build_eira, load_external, paper_distribution, solve_three_degree
from .txrx import build_system, overall_rate, receive, transmit

__all__ = [
    "__version__",
    "build_apsk", "papr_db", "shaped_pmf", "shaping_strategy", "with_pmf",
    "build_shaping_code",
    "build_eira", "load_external", "paper_distribution", "solve_three_degree",
    "build_system", "overall_rate", "receive", "transmit",
]
