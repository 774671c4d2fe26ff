"""Exception types shared across the package."""


class XLabelError(Exception):
    """Base class for all xlabel errors."""


class InvalidInput(XLabelError):
    """Malformed or out-of-contract caller input."""


class DegenerateLabels(XLabelError):
    """Training requested on labels containing fewer than two classes."""


class DeserializeError(XLabelError):
    """Model bytes are malformed or from an incompatible format version."""


class EmptyPool(XLabelError):
    """Sampling requested but no unlabeled records remain."""


class ProtocolError(XLabelError):
    """Keep/flip decision for a record that was never presented a pseudo-label."""


class ChainOrderError(XLabelError):
    """Chained prediction requested without its upstream task predictions."""
