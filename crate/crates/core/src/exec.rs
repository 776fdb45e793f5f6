//! Fan-out of independent runs. Results always come back in input order.

/// How independent runs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Across the rayon thread pool when the `parallel` feature is enabled,
    /// sequentially otherwise.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Self::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..257).collect();
        let par = Execution::Parallel.map(&items, |v| v * v);
        let seq = Execution::Sequential.map(&items, |v| v * v);
        assert_eq!(par, seq);
        assert_eq!(par[16], 256);
    }
}
