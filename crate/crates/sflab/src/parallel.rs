//! Folding curves traced in parallel and memoized per `m`.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use sflab_core::atlas::Atlas;
use sflab_core::fold::{bent_fold, BentFold};
use sflab_core::Result;

pub struct FoldCache<'a> {
    atlas: &'a Atlas,
    done: Mutex<BTreeMap<i32, BentFold>>,
}

impl<'a> FoldCache<'a> {
    pub fn new(atlas: &'a Atlas) -> Self {
        FoldCache {
            atlas,
            done: Mutex::new(BTreeMap::new()),
        }
    }

    /// Folds for `ms`, in order. Missing entries are traced in parallel.
    pub fn get(&self, ms: &[i32]) -> Result<Vec<BentFold>> {
        let mut missing: Vec<i32> = {
            let done = self.done.lock().expect("fold cache poisoned");
            ms.iter().copied().filter(|m| !done.contains_key(m)).collect()
        };
        missing.sort_unstable();
        missing.dedup();
        let traced: Vec<BentFold> = missing
            .par_iter()
            .map(|&m| bent_fold(self.atlas, m))
            .collect::<Result<_>>()?;
        let mut done = self.done.lock().expect("fold cache poisoned");
        for b in traced {
            done.insert(b.m, b);
        }
        Ok(ms.iter().map(|m| done[m].clone()).collect())
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads.filter(|&n| n > 0) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
