use std::sync::atomic::{AtomicUsize, Ordering};

use oscsq_core::experiments::Executor;

/// Runs legs on scoped worker threads. Results come back in input order, and
/// each leg is computed by a single thread, so outputs do not depend on the
/// thread count.
#[derive(Clone, Copy, Debug)]
pub struct Threaded {
    pub threads: usize,
}

impl Threaded {
    pub fn new(threads: usize) -> Self {
        Threaded { threads: threads.max(1) }
    }

    pub fn available() -> Self {
        Self::new(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

impl Executor for Threaded {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        let workers = self.threads.min(items.len());
        if workers <= 1 {
            return items.iter().map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let mut done: Vec<(usize, R)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= items.len() {
                                break out;
                            }
                            out.push((i, f(&items[i])));
                        }
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("study leg panicked")).collect()
        });
        done.sort_by_key(|(i, _)| *i);
        done.into_iter().map(|(_, r)| r).collect()
    }
}
