class NeurogenError(ValueError):
    pass


class ConfigError(NeurogenError):
    pass


class DatasetError(NeurogenError):
    pass


class IdxFormatError(DatasetError):
    def __init__(self, path, offset: int, reason: str):
        self.path = str(path)
        self.offset = offset
        self.reason = reason
        super().__init__(f"{reason} in {self.path} at offset {offset}")


class ShapeError(NeurogenError):
    pass


class NonFiniteError(NeurogenError):
    pass


class MaskAlignmentError(ShapeError):
    pass


class ModelFormatError(NeurogenError):
    pass


class ChecksumError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


class EmptyProfileError(NeurogenError):
    pass


class ClassExhaustedError(NeurogenError):
    pass
