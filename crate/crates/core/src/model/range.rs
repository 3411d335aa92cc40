/// Idempotent range query table (min or max) with O(1) lookups.
#[derive(Debug, Clone)]
pub struct SparseTable<T> {
    levels: Vec<Vec<T>>,
    combine: fn(T, T) -> T,
}

impl<T: Copy> SparseTable<T> {
    pub fn new(values: &[T], combine: fn(T, T) -> T) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next: Vec<T> = (0..=values.len() - 2 * width)
                .map(|i| combine(prev[i], prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        Self { levels, combine }
    }

    /// Combined value over the inclusive range `lo..=hi`.
    #[inline]
    pub fn query(&self, lo: usize, hi: usize) -> T {
        debug_assert!(lo <= hi && hi < self.levels[0].len());
        let len = hi - lo + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let row = &self.levels[k];
        (self.combine)(row[lo], row[hi + 1 - (1 << k)])
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }
}
