"""
Exception hierarchy for the Oscillator SAT Toolbox.
Library code raises these; the solve manager and the CLI turn them into statuses and exit codes.
"""

from typing import Optional


class SolverError(Exception):
    """Base exception for toolbox errors"""
    pass


class FormulaError(SolverError):
    """Invalid formula, clause or assignment"""
    pass


class DimacsParseError(FormulaError):
    """Malformed DIMACS CNF input"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ConfigError(SolverError):
    """Invalid parameters or settings"""
    pass


class OracleCapError(SolverError):
    """Exhaustive enumeration requested above the configured variable cap"""
    pass


class CornerError(SolverError):
    """Discrete-phase formula evaluated away from the {0, pi} corners"""
    pass


class IntegrationError(SolverError):
    """Non-finite drift or state during integration"""

    def __init__(self, message: str, step: Optional[int] = None, row_index: Optional[int] = None):
        self.step = step
        self.row_index = row_index
        details = []
        if step is not None:
            details.append(f"step {step}")
        if row_index is not None:
            details.append(f"row {row_index}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)


class TraceExportError(SolverError):
    """Failure writing a trace, table or report file"""
    pass
