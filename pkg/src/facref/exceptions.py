"""Exception hierarchy shared by all facref modules."""


class FacrefError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateGeometry(FacrefError):
    """Polygon or ring with (near-)zero area, or non-planar beyond tolerance."""


class NotAFacade(FacrefError):
    """Operation requires a non-vertical surface normal."""


class ParseError(FacrefError):
    """Malformed input file; message carries the offending location."""


class SchemaError(FacrefError):
    """Structurally valid file violating a semantic constraint."""


class ConfigError(FacrefError):
    """Missing or out-of-range configuration value."""


class InsufficientNeighborhood(FacrefError):
    """Too few (or degenerate) neighbors for an eigenvalue feature."""


class EmptyTraversal(FacrefError):
    """Ray of zero length or entirely outside the voxel grid."""


class FitError(FacrefError):
    """Opening model cannot be fitted (non-positive scale)."""


class LinkError(FacrefError):
    """Opening solid references an unknown parent surface."""


class SpecError(FacrefError):
    """Invalid scan-simulation specification."""


class PipelineError(FacrefError):
    """A pipeline stage failed; message names the stage and cause."""
