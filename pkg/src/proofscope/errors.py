"""Exception types shared across the package.

Every error raised by proofscope derives from ProofscopeError so the CLI
can separate bad input (exit 1) from internal faults (exit 2).
"""


class ProofscopeError(Exception):
    pass


class LexError(ProofscopeError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at {line}:{column}")
        self.line = line
        self.column = column


class ParseError(ProofscopeError):
    def __init__(self, message: str, line: int, column: int, expected: str = ""):
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"{message}{detail} at {line}:{column}")
        self.line = line
        self.column = column
        self.expected = expected


class UnbalancedParens(ParseError):
    pass


class UnknownName(ProofscopeError):
    def __init__(self, name: str, position=None):
        where = f" at {position[0]}:{position[1]}" if position else ""
        super().__init__(f"unknown name {name!r}{where}")
        self.name = name
        self.position = position


class DuplicateDefinition(ProofscopeError):
    def __init__(self, name: str):
        super().__init__(f"duplicate definition {name!r}")
        self.name = name


class MalformedProofRecord(ProofscopeError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"proof record {index}: {reason}")
        self.index = index
        self.reason = reason


class MissingType(ProofscopeError):
    def __init__(self, name: str):
        super().__init__(f"no declared type for {name!r}")
        self.name = name


class UnknownToken(ProofscopeError):
    def __init__(self, token: str):
        super().__init__(f"not a known keyword token: {token!r}")
        self.token = token


class VariableNotFound(ProofscopeError):
    def __init__(self, var: str):
        super().__init__(f"variable {var!r} does not occur in the tree")
        self.var = var


class UnassignedName(ProofscopeError):
    def __init__(self, name: str):
        super().__init__(f"name {name!r} has no assigned value; bootstrap it first")
        self.name = name


class TooFewObjects(ProofscopeError):
    pass


class DimensionMismatch(ProofscopeError):
    pass


class KTooLarge(ProofscopeError):
    pass


class CyclicDependency(ProofscopeError):
    def __init__(self, members):
        super().__init__(f"cyclic dependency among {sorted(members)}")
        self.members = list(members)


class DegenerateLabels(ProofscopeError):
    pass
