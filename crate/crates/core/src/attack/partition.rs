use crate::error::Result;
use crate::grid::UniformCells;
use crate::types::{BoxRegion, StateVec};

/// Uniform grid of `M = n^dim` disjoint cells covering the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePartition {
    cells: UniformCells,
}

impl StatePartition {
    pub fn new(state_space: BoxRegion, per_axis: usize) -> Result<Self> {
        Ok(Self {
            cells: UniformCells::new(state_space, per_axis)?,
        })
    }

    /// Total cell count `M`.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn per_axis(&self) -> usize {
        self.cells.per_axis()
    }

    /// Diameter shared by all cells; used as the state slack `L_s·d_s`.
    pub fn cell_diameter(&self) -> f64 {
        self.cells.cell_diameter()
    }

    #[inline]
    pub fn index(&self, s: &[f64]) -> usize {
        self.cells.index(s)
    }

    pub fn cells(&self) -> &UniformCells {
        &self.cells
    }
}

/// Row-major cell index of an in-bounds state; out-of-bounds states are rejected.
pub fn cell_index(partition: &StatePartition, s: &StateVec) -> Result<usize> {
    partition.cells.checked_index(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let slider = StatePartition::new(BoxRegion::cube(1, -1.0, 1.0).unwrap(), 16).unwrap();
        assert_eq!(cell_index(&slider, &StateVec::from([-1.0])).unwrap(), 0);
        assert_eq!(cell_index(&slider, &StateVec::from([1.0])).unwrap(), 15);
        assert!(cell_index(&slider, &StateVec::from([1.01])).is_err());

        let vehicle = StatePartition::new(BoxRegion::cube(2, 0.0, 8.0).unwrap(), 9).unwrap();
        assert_eq!(vehicle.len(), 81);
        assert_eq!(
            cell_index(&vehicle, &StateVec::from([0.5, 8.0])).unwrap(),
            72
        );
    }

    #[test]
    fn cells_cover_and_are_disjoint() {
        let p = StatePartition::new(BoxRegion::cube(2, 0.0, 8.0).unwrap(), 9).unwrap();
        let mut hits = vec![0usize; p.len()];
        for i in 0..=160 {
            for j in 0..=160 {
                let s = [i as f64 * 0.05, j as f64 * 0.05];
                let idx = p.index(&s);
                hits[idx] += 1;
                assert!(p.cells().cell_box(idx).contains(&s));
            }
        }
        assert!(hits.iter().all(|&h| h > 0));
    }
}
