"""Exception hierarchy shared by every stage of the pipeline."""


class EpicorrError(ValueError):
    """Base class; the CLI maps any subclass to a stage-tagged non-zero exit."""


class ParseError(EpicorrError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class NegativeValueError(ParseError):
    pass


class GapError(EpicorrError):
    def __init__(self, before, after):
        self.before = before
        self.after = after
        super().__init__(f"dates not consecutive: {before.isoformat()} is followed by {after.isoformat()}")


class DuplicateRegionError(EpicorrError):
    def __init__(self, region):
        self.region = region
        super().__init__(f"duplicate region {region!r}")


class RangeError(EpicorrError):
    pass


class NumericError(EpicorrError):
    pass


class SpecError(EpicorrError):
    pass


class PlanError(EpicorrError):
    pass


class DegenerateSeriesError(EpicorrError):
    def __init__(self, region, epoch_index):
        self.region = region
        self.epoch_index = epoch_index
        super().__init__(f"region {region!r} has zero variance in epoch {epoch_index}")


class ShapeError(EpicorrError):
    pass


class KError(EpicorrError):
    pass


class DiagnosticsError(EpicorrError):
    pass


class ConfigError(EpicorrError):
    pass
