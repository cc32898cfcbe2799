use std::ops::Range;

use crate::io::cube::RadianceCube;
use crate::pixels::PixelSet;
use crate::{Error, Result, Scalar};

/// A contiguous block of detector columns processed as one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPartition {
    pub index: usize,
    pub columns: Range<usize>,
}

impl ColumnPartition {
    pub fn width(&self) -> usize {
        self.columns.len()
    }
}

/// Split `samples` columns into groups of `group` adjacent detectors. Left
/// over columns form one narrower trailing partition.
pub fn partition_columns(samples: usize, group: usize) -> Result<Vec<ColumnPartition>> {
    if group < 1 || group > samples {
        return Err(Error::InvalidGroupSize { group, samples });
    }
    Ok((0..samples.div_ceil(group))
        .map(|index| ColumnPartition {
            index,
            columns: index * group..((index + 1) * group).min(samples),
        })
        .collect())
}

/// The valid pixels of one partition, borrowed from the cube.
///
/// Pixels are ordered line by line, then column, which fixes the summation
/// order of every statistic computed over them.
pub struct PartitionPixels<'a, T> {
    cube: &'a RadianceCube<T>,
    partition: ColumnPartition,
    flat: Vec<usize>,
}

impl<'a, T: Scalar> PartitionPixels<'a, T> {
    pub fn new(cube: &'a RadianceCube<T>, partition: ColumnPartition) -> Self {
        let samples = cube.samples();
        let mut flat = Vec::with_capacity(cube.lines() * partition.width());
        for line in 0..cube.lines() {
            for s in partition.columns.clone() {
                let idx = line * samples + s;
                if cube.valid_mask()[idx] {
                    flat.push(idx);
                }
            }
        }
        Self { cube, partition, flat }
    }

    pub fn partition(&self) -> &ColumnPartition {
        &self.partition
    }

    /// Flat `line * samples + sample` index of each pixel in the set.
    pub fn flat_indices(&self) -> &[usize] {
        &self.flat
    }
}

impl<T: Scalar> PixelSet<T> for PartitionPixels<'_, T> {
    fn pixel_count(&self) -> usize {
        self.flat.len()
    }

    fn bands(&self) -> usize {
        self.cube.bands()
    }

    #[inline]
    fn pixel(&self, i: usize) -> &[T] {
        self.cube.pixel_at(self.flat[i])
    }
}
