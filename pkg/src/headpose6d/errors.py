"""Exception types shared across the package."""


class DegenerateInput(ValueError):
    """A 6D vector whose columns carry no orientation (zero or parallel)."""


class DegenerateGeometry(ValueError):
    """A point set too degenerate (coincident or collinear) to fix a rotation."""


class ConfigError(ValueError):
    pass


class DataError(Exception):
    """Base class for problems with user-supplied data files."""


class ParseError(DataError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DuplicateId(DataError):
    def __init__(self, record_id, line=None):
        self.id = record_id
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate id {record_id!r}{where}")


class InvalidMatrix(DataError):
    def __init__(self, record_id, detail=""):
        self.id = record_id
        super().__init__(f"record {record_id!r} is not a rotation matrix{': ' + detail if detail else ''}")


class MismatchedIds(DataError):
    def __init__(self, missing_in_pred, missing_in_gt, limit=10):
        self.missing_in_pred = sorted(missing_in_pred)
        self.missing_in_gt = sorted(missing_in_gt)
        parts = []
        if self.missing_in_pred:
            parts.append(f"{len(self.missing_in_pred)} ids missing from predictions: "
                         f"{', '.join(self.missing_in_pred[:limit])}")
        if self.missing_in_gt:
            parts.append(f"{len(self.missing_in_gt)} ids missing from ground truth: "
                         f"{', '.join(self.missing_in_gt[:limit])}")
        super().__init__("; ".join(parts) or "id sets differ")


class EmptySet(DataError):
    pass


class UnknownCamera(DataError):
    def __init__(self, camera_id):
        self.camera_id = camera_id
        super().__init__(f"unknown camera id {camera_id!r}")
