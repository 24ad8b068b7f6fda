"""Exceptions shared across the package."""


class ContractViolation(ValueError):
    """An input violated a documented precondition."""


class DegenerateInput(ContractViolation):
    """The input is legal in form but degenerate for the requested operation."""


class QueryBudgetExceeded(RuntimeError):
    """The membership oracle refused a query past its budget."""
