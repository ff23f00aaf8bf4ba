//! Execution-mode switch for the data-parallel loops.
//!
//! With the `parallel` feature (default) [`Parallelism::Parallel`] dispatches
//! through rayon; without it every call runs sequentially. Both paths must
//! produce identical results, which the tests and the benches rely on.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// True when work will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }

    /// Order-preserving map over owned items.
    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Send + Sync,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// Runs `f` on every element of `items` with its index.
    pub fn for_each_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Send + Sync,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            items.par_iter_mut().enumerate().for_each(|(i, t)| f(i, t));
            return;
        }
        items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
    }

    /// True iff `pred` holds for every index in `0..n`.
    pub fn all_indices<F>(self, n: u64, pred: F) -> bool
    where
        F: Fn(u64) -> bool + Send + Sync,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().all(pred);
        }
        (0..n).all(pred)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let items: Vec<u64> = (0..1000).collect();
        let a = Parallelism::Sequential.map(items.clone(), |x| x * x);
        let b = Parallelism::Parallel.map(items, |x| x * x);
        assert_eq!(a, b);
        assert!(Parallelism::Parallel.all_indices(10_000, |i| i < 10_000));
        assert!(!Parallelism::Sequential.all_indices(10, |i| i != 7));
    }
}
