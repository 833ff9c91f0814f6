"""Exception types shared across the package."""


class SqlCoreError(Exception):
    """Base class for lexing and artifact errors."""


class LexError(SqlCoreError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnterminatedString(LexError):
    def __init__(self, offset: int):
        super().__init__("unterminated quoted literal", offset)


class UnterminatedComment(LexError):
    def __init__(self, offset: int):
        super().__init__("unterminated block comment", offset)


class EmptyArtifact(SqlCoreError):
    """The artifact has no significant tokens."""


class StrategyError(Exception):
    """A strategy could not transform its input."""


class ReplacementCollision(StrategyError):
    def __init__(self, replacement: str):
        super().__init__(f"replacement {replacement!r} already occurs in the input")
        self.replacement = replacement


class NothingToDistill(StrategyError):
    """No CREATE TABLE or routine header to keep."""


class ParseRequired(StrategyError):
    def __init__(self, failure):
        super().__init__(f"input does not parse: {failure}")
        self.failure = failure


class NoMaskableIdentifiers(UserWarning):
    """Masking found only reserved words; the map is empty."""


class InvalidDictionary(ValueError):
    pass


class MetricError(ValueError):
    pass


class EmptyEvaluationSet(MetricError):
    pass


class EmptyReference(MetricError):
    pass


class ZeroTokenDenominator(MetricError):
    pass


class BaselineMismatch(MetricError):
    pass


class GatewayError(Exception):
    pass


class CacheMiss(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"no recorded response for key {key}")
        self.key = key


class ConflictingRecording(GatewayError):
    def __init__(self, key: str):
        super().__init__(f"key {key} already recorded with a different response")
        self.key = key


class ProviderError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class Timeout(GatewayError):
    pass


class PipelineError(Exception):
    pass


class MalformedRecord(PipelineError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicateId(PipelineError):
    def __init__(self, line: int, case_id: str):
        super().__init__(f"line {line}: duplicate id {case_id!r}")
        self.line = line
        self.case_id = case_id


class InvalidReference(PipelineError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: reference does not parse: {message}")
        self.line = line


class BudgetUnsatisfiable(PipelineError):
    pass


class GenerationFailed(PipelineError):
    pass


class ConfigError(PipelineError):
    pass
