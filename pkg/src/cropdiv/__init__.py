"""Multi-scale alpha, beta and gamma crop diversity from categorical rasters."""
from .diversity import (
    DiversityRecord,
    ProportionVector,
    UndefinedUnitError,
    alpha,
    beta,
    diversity,
    entropy_effective,
    gamma,
    proportions,
    richness,
)
from .ingest import (
    BORDER,
    OUTSIDE,
    CategoricalRaster,
    ClassScheme,
    CountCube,
    RasterFormatError,
    ZoneMap,
    read_raster,
    read_zone_map,
    tally,
    write_raster,
)
from .multiscale import ScaleResult, ScaleSet, block_partition, scale_sweep

__version__ = "0.1.0"
