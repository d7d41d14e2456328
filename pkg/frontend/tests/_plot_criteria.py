"""Storage for the plotting acceptance verdict, printed by conftest."""

CRITERIA = {}


def record_criterion(number, passed, message):
    CRITERIA[number] = (passed, message)
