"""Protocol runs, sweeps, exports, verification gates and figure datasets."""

__all__ = [
    "ProtocolService",
    "SweepService",
    "ExportService",
    "VerificationService",
    "FiguresService",
]
