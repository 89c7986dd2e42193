"""Exception types raised across the package."""


class OctClassError(Exception):
    """Base class for all octclass errors."""


# dataset / image ingestion
class MissingClassDir(OctClassError):
    pass


class EmptyDataset(OctClassError):
    pass


class DecodeError(OctClassError):
    pass


class InvalidFractions(OctClassError):
    pass


class EmptySplit(OctClassError):
    pass


# augmentation
class InvalidAlpha(OctClassError):
    pass


# models / checkpoints
class InvalidConfig(OctClassError):
    pass


class ShapeMismatch(OctClassError):
    pass


class UnknownLayer(OctClassError):
    pass


class NonSpatialLayer(OctClassError):
    pass


class ChecksumMismatch(OctClassError):
    pass


class ConfigMismatch(OctClassError):
    pass


# training
class NonFiniteLoss(OctClassError):
    pass


# metrics / reports
class LengthMismatch(OctClassError):
    pass


class IndexOutOfRange(OctClassError):
    pass


class UnknownFormat(OctClassError):
    pass


class ParseError(OctClassError):
    pass


# explanations
class InvalidSegmentCount(OctClassError):
    pass


class DegenerateSampling(OctClassError):
    pass


class UnknownMethod(OctClassError):
    pass


# run configuration
class ConfigError(OctClassError):
    pass
