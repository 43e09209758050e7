//! Switch between sequential and data-parallel evaluation of independent work
//! items (users, candidate sessions, oracle instances, evaluation methods).
//!
//! Without the `parallel` feature, [`Execution::Parallel`] runs sequentially.
//! Results are always returned in input order, so the choice never changes
//! output bytes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`map`](Self::map) for fallible work; the first error in input
    /// order wins.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..10_000).collect();
        let seq = Execution::Sequential.map(&items, |x| x * 3);
        let par = Execution::Parallel.map(&items, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(seq[9_999], 29_997);
    }

    #[test]
    fn try_map_reports_first_error() {
        let items = [1, 2, -3, 4, -5];
        let r: Result<Vec<i32>, i32> = Execution::Parallel.try_map(&items, |&x| if x < 0 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(-3));
    }
}
