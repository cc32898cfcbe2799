//! ENVI raster input and output, spectral subsetting and detector-column
//! partitioning.

pub mod band;
pub mod cube;
pub mod header;
pub mod partition;

pub use band::{read_band, write_band, write_band_as, ENHANCEMENT_UNITS};
pub use cube::{
    data_path_for, encode_cube, header_path_for, open_cube, read_cube, read_cube_from, read_header,
    select_spectral_window, write_cube, RadianceCube, DEFAULT_NODATA,
};
pub use header::{parse_envi_header, ByteOrder, DataType, EnviHeader, Interleave};
pub use partition::{partition_columns, ColumnPartition, PartitionPixels};
