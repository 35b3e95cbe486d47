//! Thin wrapper over rayon so the crate also builds without threads
//! (the browser demo disables the `parallel` feature).

use std::fmt;

/// Worker pool handle. `Workers::serial()` runs everything on the calling
/// thread and is the canonical deterministic mode.
pub struct Workers {
    count: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl fmt::Debug for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Workers").field("count", &self.count).finish()
    }
}

impl Workers {
    pub fn serial() -> Self {
        Workers {
            count: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// `count = 0` means "all available cores".
    pub fn new(count: usize) -> Self {
        let count = if count == 0 { available() } else { count };
        #[cfg(feature = "parallel")]
        {
            if count > 1 {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(count).build() {
                    return Workers {
                        count,
                        pool: Some(pool),
                    };
                }
            }
        }
        let _ = count;
        Self::serial()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Applies `f` to every element in place. Each call only touches its own
    /// element, so results do not depend on the worker count.
    pub fn for_each_mut<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            pool.install(|| {
                items
                    .par_iter_mut()
                    .enumerate()
                    .with_min_len(512)
                    .for_each(|(i, it)| f(i, it))
            });
            return;
        }
        items.iter_mut().enumerate().for_each(|(i, it)| f(i, it));
    }

    /// Maps fixed-size chunks to partial results, returned in chunk order.
    /// The chunk size is chosen by the caller, so a reduction over the
    /// returned vector is bit-identical for every worker count.
    pub fn map_chunks<T, R, F>(&self, items: &[T], chunk: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &[T]) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| {
                items
                    .par_chunks(chunk)
                    .enumerate()
                    .map(|(i, c)| f(i * chunk, c))
                    .collect()
            });
        }
        items
            .chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i * chunk, c))
            .collect()
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::serial()
    }
}

pub fn available() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
