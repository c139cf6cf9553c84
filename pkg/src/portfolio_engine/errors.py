"""Exception hierarchy shared by every stage."""


class PortfolioError(Exception):
    """Base class for all errors raised by the engine."""


# --- data loading -----------------------------------------------------------

class DataError(PortfolioError):
    pass


class MissingFile(DataError):
    def __init__(self, path):
        super().__init__(f"file not found: {path}")
        self.path = path


class MalformedRow(DataError):
    def __init__(self, line: int, detail: str = ""):
        msg = f"malformed row at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line = line


class DuplicateFirm(DataError):
    def __init__(self, firm_id: str):
        super().__init__(f"duplicate firm_id: {firm_id}")
        self.firm_id = firm_id


class NonFiniteValue(DataError):
    def __init__(self, field: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"non-finite value in field {field!r}{where}")
        self.field = field


class NonPositivePrice(DataError):
    def __init__(self, firm_id: str, date):
        super().__init__(f"non-positive close for {firm_id} on {date}")
        self.firm_id = firm_id
        self.date = date


class DuplicateObservation(DataError):
    def __init__(self, firm_id: str, date):
        super().__init__(f"duplicate observation for {firm_id} on {date}")
        self.firm_id = firm_id
        self.date = date


class SeriesTooShort(DataError):
    pass


class InsufficientOverlap(DataError):
    pass


# --- LP / DEA ---------------------------------------------------------------

class LPError(PortfolioError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


class NumericalFailure(LPError):
    pass


class NoValidFirms(PortfolioError):
    pass


# --- sentiment --------------------------------------------------------------

class FirmMismatch(PortfolioError):
    pass


class LexiconError(DataError):
    pass


# --- clustering -------------------------------------------------------------

class ZeroVarianceSeries(PortfolioError):
    def __init__(self, firm_id: str):
        super().__init__(f"return series of {firm_id} has zero variance")
        self.firm_id = firm_id


class InsufficientObservations(PortfolioError):
    pass


class KTooLarge(PortfolioError):
    pass


# --- ranker -----------------------------------------------------------------

class WindowTooLarge(PortfolioError):
    pass


class MissingMacroCoverage(PortfolioError):
    pass


class TooFewSamples(PortfolioError):
    pass


# --- optimizer --------------------------------------------------------------

class DimensionTooLarge(PortfolioError):
    pass


class ZeroVariancePortfolio(PortfolioError):
    pass


# --- pipeline ---------------------------------------------------------------

class ConfigError(PortfolioError):
    pass


class MissingUpstreamArtifact(PortfolioError):
    def __init__(self, path):
        super().__init__(f"missing upstream artifact: {path}")
        self.path = path


class StageError(PortfolioError):
    """A failure inside one pipeline stage, carrying the process exit code."""

    def __init__(self, stage: str, exit_code: int, cause: BaseException | str):
        self.stage = stage
        self.exit_code = exit_code
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
