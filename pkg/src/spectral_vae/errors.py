"""Exception hierarchy shared by every module of the package."""


class SpectralVaeError(Exception):
    """Base class for all errors raised by spectral_vae."""


# audio-io
class NotWav(SpectralVaeError):
    pass


class UnsupportedFormat(SpectralVaeError):
    def __init__(self, field, found, expected):
        self.field = field
        super().__init__(f"unsupported {field}: got {found!r}, expected {expected!r}")


class TruncatedFile(SpectralVaeError):
    pass


# dsp
class SignalTooShort(SpectralVaeError):
    pass


class InvalidRange(SpectralVaeError):
    pass


# nn engine
class ShapeMismatch(SpectralVaeError):
    pass


class InvalidRate(SpectralVaeError):
    pass


class GraphNotEvaluated(SpectralVaeError):
    pass


class NonFiniteValue(SpectralVaeError):
    pass


class CheckpointError(SpectralVaeError):
    pass


# vae / classifier
class EmptyDataset(SpectralVaeError):
    pass


class DivergedLoss(SpectralVaeError):
    pass


class IndexOutOfRange(SpectralVaeError):
    pass


class DimMismatch(SpectralVaeError):
    pass


# features
class InvalidConstant(SpectralVaeError):
    pass


class TooFewFrames(SpectralVaeError):
    pass


class ClipTooLong(SpectralVaeError):
    pass


class MissingFile(SpectralVaeError):
    def __init__(self, paths):
        self.paths = list(paths)
        super().__init__("missing files: " + ", ".join(str(p) for p in self.paths))


class DimensionDrift(SpectralVaeError):
    pass


class FeatureFileError(SpectralVaeError):
    pass


class ManifestError(SpectralVaeError):
    pass


class ConfigError(SpectralVaeError):
    pass
