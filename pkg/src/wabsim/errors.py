"""Exception hierarchy shared by all wabsim modules."""


class WabError(Exception):
    """Base class for every error raised by wabsim."""


# topology
class UnknownChassis(WabError):
    pass


class UnknownNode(WabError):
    pass


class WrongRole(WabError):
    pass


class CoreUnreachable(WabError):
    pass


class NotRegistered(WabError):
    pass


class DuplicateInterface(WabError):
    pass


class NodeNotOperational(WabError):
    pass


class NoN3Session(WabError):
    pass


class IllegalTransition(WabError):
    pass


# encap
class StackOverflow(WabError):
    pass


class EmptyStack(WabError):
    pass


class OverheadExceedsMtu(WabError):
    pass


# engine
class InvalidScenario(WabError):
    """Scenario failed validation. ``location`` points at the offending field."""

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class OutOfBounds(WabError):
    pass


class NoSession(WabError):
    pass


# cli
class ParseError(WabError):
    def __init__(self, message, field="", line=None):
        self.field = field
        self.line = line
        where = field
        if line is not None:
            where = f"line {line}" + (f", field {field}" if field else "")
        super().__init__(f"{where}: {message}" if where else message)


class MissingOutput(WabError):
    pass
