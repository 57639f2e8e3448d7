"""Exceptions and small helpers shared by the entity and protocol layers."""

import typing


class BlackchainError(Exception):
    pass


class PastTickError(BlackchainError):
    pass


class DuplicateEnrollmentError(BlackchainError):
    pass


class UnknownIdentityError(BlackchainError):
    pass


class IssuanceRefusedError(BlackchainError):
    pass


class AuthorizationError(BlackchainError):
    pass


class EvidenceClosureError(BlackchainError):
    pass


class NotHeadError(BlackchainError):
    pass


class UnintroducedSignerError(BlackchainError):
    pass


class InvalidTransactionError(BlackchainError):
    pass


class ChainParseError(BlackchainError):
    pass


class ConfigError(BlackchainError):
    def __init__(self, key: str, msg: str = ""):
        self.key = key
        super().__init__(f"{key}: {msg}" if msg else key)


class Verdict(typing.NamedTuple):
    """Outcome of a verification. Falsy when verification failed."""

    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


VALID = Verdict(True)


def reject(reason: str) -> Verdict:
    return Verdict(False, reason)
