//! Execution strategy for the data-parallel loops (planner sweeps,
//! similarity rollouts, sampled argmins, multi-seed runs).
//!
//! With the `parallel` feature the loops run on rayon; without it, or with
//! [`Execution::Sequential`], they run on the calling thread. Both paths
//! produce identical results: work items never share mutable state and
//! reductions happen in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `(0..n).map(f).collect()`, possibly in parallel.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    /// Fills `out` with `f(i)` chunk by chunk, possibly in parallel.
    pub fn fill_chunks<T, F>(self, out: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            Execution::Sequential => out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c)),
            #[cfg(feature = "parallel")]
            Execution::Parallel => out
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let seq = Execution::Sequential.map_range(1000, |i| (i as f64).sqrt());
        let def = Execution::default().map_range(1000, |i| (i as f64).sqrt());
        assert_eq!(seq, def);

        let mut a = vec![0usize; 97];
        let mut b = vec![0usize; 97];
        Execution::Sequential.fill_chunks(&mut a, 10, |i, c| c.iter_mut().for_each(|x| *x = i));
        Execution::default().fill_chunks(&mut b, 10, |i, c| c.iter_mut().for_each(|x| *x = i));
        assert_eq!(a, b);
    }
}
