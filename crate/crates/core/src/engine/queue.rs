/// Monotone integer priority queue (Dial's algorithm) over a circular array
/// of buckets.
///
/// Keys popped are non-decreasing and every pushed key must lie in
/// `[current, current + span)`, where `span` is the bucket count. With edge
/// costs bounded by `span - 1` this always holds during Dijkstra.
#[derive(Clone, Debug)]
pub struct BucketQueue {
    buckets: Vec<Vec<u32>>,
    current: u64,
    len: usize,
}

impl BucketQueue {
    pub fn new(span: usize) -> Self {
        BucketQueue {
            buckets: vec![Vec::new(); span.max(1)],
            current: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn span(&self) -> usize {
        self.buckets.len()
    }

    /// Smallest key that may still be popped.
    pub fn current(&self) -> u64 {
        self.current
    }

    #[inline]
    pub fn push(&mut self, key: u64, item: u32) {
        debug_assert!(
            key >= self.current,
            "key {key} below current {}",
            self.current
        );
        debug_assert!(
            key - self.current < self.buckets.len() as u64,
            "key {key} beyond span"
        );
        let n = self.buckets.len() as u64;
        self.buckets[(key % n) as usize].push(item);
        self.len += 1;
    }

    #[inline]
    pub fn pop(&mut self) -> Option<(u64, u32)> {
        if self.len == 0 {
            return None;
        }
        let n = self.buckets.len() as u64;
        loop {
            if let Some(item) = self.buckets[(self.current % n) as usize].pop() {
                self.len -= 1;
                return Some((self.current, item));
            }
            self.current += 1;
        }
    }

    pub fn clear(&mut self) {
        self.buckets.iter_mut().for_each(Vec::clear);
        self.current = 0;
        self.len = 0;
    }
}
