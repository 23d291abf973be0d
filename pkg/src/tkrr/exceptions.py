"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes or mode sizes are incompatible."""


class TensorSizeError(ValueError):
    """A dense materialization would exceed the configured entry cap."""


class DomainError(ValueError):
    """An input lies outside the hyperbox on which the feature map is defined."""


class ParameterError(ValueError):
    """A hyperparameter is outside its admissible range."""


class ModelFormatError(ValueError):
    """A serialized model or report could not be parsed."""
