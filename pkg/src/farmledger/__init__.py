"""farmledger: content-addressed farm data ledger over a simulated p2p network."""

__version__ = "0.1.0"
