//! Thread-pool executor for the core crate's parallel hooks.

use rayon::prelude::*;
use sbsid_core::parallel::Executor;

/// Runs `map` on the global rayon pool. Output order matches input order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        let f = &f;
        items.par_iter().map(f).collect()
    }
}
