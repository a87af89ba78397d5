//! Execution strategy for the enumeration-heavy passes.
//!
//! The expensive loops (piece enumeration, oracle pair scans, simplex pricing)
//! run either sequentially or on the rayon thread pool.  The choice is a
//! runtime value so both paths can be exercised and benchmarked from a single
//! binary; the `parallel` cargo feature removes the rayon dependency entirely
//! for minimal builds.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Parallelism::Rayon
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Parallelism::Sequential
    }
}

impl Parallelism {
    /// Map `f` over `0..n` and collect the results in index order.
    pub fn map_indices<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
        }
    }

    /// Map `f` over `0..n` and flatten the per-index result vectors in order.
    pub fn flat_map_indices<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> Vec<T> + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..n).flat_map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => {
                use rayon::prelude::*;
                (0..n).into_par_iter().flat_map_iter(f).collect()
            }
        }
    }

    /// Find the index in `0..n` whose key is maximal, breaking ties towards
    /// the smaller index.  Returns `None` when every key is `None` or `n == 0`.
    pub fn argmax_by_key<K, F>(self, n: usize, f: F) -> Option<usize>
    where
        K: Ord + Send,
        F: Fn(usize) -> Option<K> + Sync + Send,
    {
        let pick = |a: Option<(usize, K)>, b: Option<(usize, K)>| match (a, b) {
            (None, b) => b,
            (a, None) => a,
            (Some((ia, ka)), Some((ib, kb))) => {
                if kb > ka || (kb == ka && ib < ia) {
                    Some((ib, kb))
                } else {
                    Some((ia, ka))
                }
            }
        };
        match self {
            Parallelism::Sequential => {
                let mut best: Option<(usize, K)> = None;
                for i in 0..n {
                    if let Some(k) = f(i) {
                        best = pick(best, Some((i, k)));
                    }
                }
                best.map(|(i, _)| i)
            }
            #[cfg(feature = "parallel")]
            Parallelism::Rayon => {
                use rayon::prelude::*;
                (0..n)
                    .into_par_iter()
                    .filter_map(|i| f(i).map(|k| (i, k)))
                    .reduce_with(|a, b| pick(Some(a), Some(b)).unwrap())
                    .map(|(i, _)| i)
            }
        }
    }
}

/// splitmix64 step, used to derive deterministic permutations from a seed.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic Fisher-Yates shuffle driven by splitmix64.
///
/// Used to randomise witness scan orders and column orders without pulling a
/// RNG dependency into the decision procedures.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut state = seed;
    for i in (1..items.len()).rev() {
        let j = (splitmix64(&mut state) % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffle_is_deterministic_and_permutes() {
        let mut a: Vec<u32> = (0..50).collect();
        let mut b: Vec<u32> = (0..50).collect();
        seeded_shuffle(&mut a, 7);
        seeded_shuffle(&mut b, 7);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        let mut c: Vec<u32> = (0..50).collect();
        seeded_shuffle(&mut c, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn map_indices_matches_sequential() {
        let seq = Parallelism::Sequential.map_indices(100, |i| i * i);
        #[cfg(feature = "parallel")]
        {
            let par = Parallelism::Rayon.map_indices(100, |i| i * i);
            assert_eq!(seq, par);
        }
        assert_eq!(seq[10], 100);
    }

    #[test]
    fn argmax_prefers_smallest_index_on_ties() {
        let keys = [1, 3, 3, 2];
        let got = Parallelism::Sequential.argmax_by_key(4, |i| Some(keys[i]));
        assert_eq!(got, Some(1));
        #[cfg(feature = "parallel")]
        {
            let got = Parallelism::Rayon.argmax_by_key(4, |i| Some(keys[i]));
            assert_eq!(got, Some(1));
        }
    }
}
