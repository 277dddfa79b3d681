//! Uniform discretizations of boxes: disjoint cells (for state partitions
//! and agent state bins) and inclusive point lattices (for planner and
//! agent action grids). Multi-axis indices are row-major with axis 0 varying
//! fastest, so in 2-D `index = row * n + col` with `row` taken from axis 1.

use crate::error::{Error, Result};
use crate::types::BoxRegion;

/// `n` equal-width half-open cells per axis; the top edge folds into the last cell.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformCells {
    region: BoxRegion,
    per_axis: usize,
    total: usize,
}

impl UniformCells {
    pub fn new(region: BoxRegion, per_axis: usize) -> Result<Self> {
        if per_axis == 0 {
            return Err(Error::config("cells per axis must be positive"));
        }
        let total = checked_pow(per_axis, region.dim())?;
        Ok(Self {
            region,
            per_axis,
            total,
        })
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    #[inline]
    pub fn axis_bin(&self, axis: usize, x: f64) -> usize {
        let lo = self.region.lo()[axis];
        let w = self.region.width(axis);
        let t = ((x - lo) / w * self.per_axis as f64).floor();
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(self.per_axis - 1)
        }
    }

    /// Cell index of an in-bounds point; out-of-bounds coordinates are
    /// clamped to the nearest edge cell.
    #[inline]
    pub fn index(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (axis, v) in x.iter().enumerate() {
            idx += self.axis_bin(axis, *v) * stride;
            stride *= self.per_axis;
        }
        idx
    }

    /// Index with a bounds check.
    pub fn checked_index(&self, x: &[f64]) -> Result<usize> {
        self.region.check("state", x)?;
        Ok(self.index(x))
    }

    /// Per-axis bins of a flat index.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        (0..self.region.dim())
            .map(|_| {
                let b = idx % self.per_axis;
                idx /= self.per_axis;
                b
            })
            .collect()
    }

    pub fn cell_box(&self, idx: usize) -> BoxRegion {
        let bins = self.unravel(idx);
        let (lo, hi): (Vec<f64>, Vec<f64>) = bins
            .iter()
            .enumerate()
            .map(|(axis, &b)| {
                let w = self.region.width(axis) / self.per_axis as f64;
                let l = self.region.lo()[axis] + b as f64 * w;
                (l, l + w)
            })
            .unzip();
        BoxRegion::new(lo, hi).expect("cells have positive width")
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        self.cell_box(idx).center()
    }

    /// Euclidean diameter shared by every cell.
    pub fn cell_diameter(&self) -> f64 {
        (0..self.region.dim())
            .map(|axis| {
                let w = self.region.width(axis) / self.per_axis as f64;
                w * w
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `n` evenly spaced points per axis from `lo` to `hi` inclusive.
#[derive(Clone, Debug, PartialEq)]
pub struct PointLattice {
    region: BoxRegion,
    per_axis: usize,
    total: usize,
}

impl PointLattice {
    pub fn new(region: BoxRegion, per_axis: usize) -> Result<Self> {
        if per_axis < 2 {
            return Err(Error::config(
                "a point lattice needs at least 2 points per axis",
            ));
        }
        let total = checked_pow(per_axis, region.dim())?;
        Ok(Self {
            region,
            per_axis,
            total,
        })
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.region.width(axis) / (self.per_axis - 1) as f64
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.per_axis {
            self.region.hi()[axis]
        } else {
            self.region.lo()[axis] + i as f64 * self.spacing(axis)
        }
    }

    /// Writes the coordinates of point `idx` into `out`.
    #[inline]
    pub fn point_into(&self, mut idx: usize, out: &mut [f64]) {
        for (axis, o) in out.iter_mut().enumerate() {
            *o = self.coord(axis, idx % self.per_axis);
            idx /= self.per_axis;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.point_into(idx, &mut out);
        out
    }

    /// Index of the nearest lattice point (per-axis rounding, clamped).
    #[inline]
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (axis, v) in x.iter().enumerate() {
            let t = ((v - self.region.lo()[axis]) / self.spacing(axis)).round();
            let i = if t <= 0.0 {
                0
            } else {
                (t as usize).min(self.per_axis - 1)
            };
            idx += i * stride;
            stride *= self.per_axis;
        }
        idx
    }
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or_else(|| Error::config(format!("grid of {base}^{exp} cells is too large")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cell_index_examples() {
        let slider = UniformCells::new(BoxRegion::cube(1, -1.0, 1.0).unwrap(), 16).unwrap();
        assert_eq!(slider.index(&[-1.0]), 0);
        assert_eq!(slider.index(&[1.0]), 15);
        assert_eq!(slider.cell_diameter(), 0.125);

        let vehicle = UniformCells::new(BoxRegion::cube(2, 0.0, 8.0).unwrap(), 9).unwrap();
        assert_eq!(vehicle.len(), 81);
        // Row from axis 1 (8 folds into row 8), column from axis 0.
        assert_eq!(vehicle.index(&[0.5, 8.0]), 8 * 9);
    }

    #[test]
    fn lattice_nearest_round_trip() {
        let lat = PointLattice::new(BoxRegion::cube(2, -1.0, 1.0).unwrap(), 21).unwrap();
        for idx in 0..lat.len() {
            assert_eq!(lat.nearest(&lat.point(idx)), idx);
        }
        assert_eq!(lat.point(lat.len() - 1), vec![1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn every_point_lies_in_its_cell(x in -1.0f64..=1.0, y in 0.0f64..=8.0, n in 1usize..20) {
            let cells = UniformCells::new(
                BoxRegion::new(vec![-1.0, 0.0], vec![1.0, 8.0]).unwrap(), n).unwrap();
            let idx = cells.index(&[x, y]);
            prop_assert!(idx < cells.len());
            prop_assert!(cells.cell_box(idx).contains(&[x, y]));
            prop_assert!(cells.cell_box(idx).diameter() <= cells.cell_diameter() + 1e-12);
        }
    }
}
