use crate::geometry::Pixel;

pub const DEFAULT_FREEZE_AFTER_MS: u64 = 1500;

/// Tracks how long each leading part of the live wire has stayed unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct CoolingState {
    pub freeze_after: u64,
    last_wire: Vec<Pixel>,
    /// `since[i]`: time at which position `i` of the wire last changed.
    since: Vec<u64>,
}

/// A wire prefix that stayed invariant long enough to be committed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrozenPrefix {
    pub seed: Pixel,
    pub len: usize,
}

impl CoolingState {
    pub fn new(freeze_after: u64) -> Self {
        CoolingState {
            freeze_after,
            last_wire: Vec::new(),
            since: Vec::new(),
        }
    }

    pub fn last_wire(&self) -> &[Pixel] {
        &self.last_wire
    }

    /// Length of the prefix that has been stable since at least
    /// `now - freeze_after`.
    pub fn stable_prefix_len(&self, now: u64) -> usize {
        // `since` is non-decreasing along the wire: a position can only stay
        // unchanged if every position before it did.
        self.since
            .partition_point(|&t| now.saturating_sub(t) >= self.freeze_after)
    }

    pub fn reset(&mut self) {
        self.last_wire.clear();
        self.since.clear();
    }

    /// Records `wire` at time `now`. Returns the frozen prefix when a prefix
    /// of at least two pixels has been unchanged for `freeze_after`; the state
    /// is reset in that case so the caller can commit the prefix.
    pub fn tick(&mut self, wire: &[Pixel], now: u64) -> Option<FrozenPrefix> {
        let common = wire
            .iter()
            .zip(&self.last_wire)
            .take_while(|(a, b)| a == b)
            .count();
        self.since.truncate(common);
        self.since.resize(wire.len(), now);
        self.last_wire.clear();
        self.last_wire.extend_from_slice(wire);
        let len = self.stable_prefix_len(now);
        if len >= 2 {
            let seed = wire[len - 1];
            self.reset();
            Some(FrozenPrefix { seed, len })
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: i32, y: i32) -> Vec<Pixel> {
        (0..n).map(|x| Pixel::new(x, y)).collect()
    }

    #[test]
    fn changing_wire_never_fires() {
        let mut c = CoolingState::new(100);
        for t in 0..50 {
            // the second pixel differs every tick
            let mut w = vec![Pixel::new(0, 0), Pixel::new(1, t % 2)];
            w.push(Pixel::new(2, t));
            assert_eq!(c.tick(&w, t as u64 * 60), None);
        }
    }

    #[test]
    fn stable_prefix_fires_at_its_end_after_freeze() {
        let mut c = CoolingState::new(1000);
        let prefix = line(10, 0);
        let wire_at = |k: i32| {
            let mut w = prefix.clone();
            w.push(Pixel::new(10, k % 3 - 1));
            w.push(Pixel::new(11, k));
            w
        };
        for (k, t) in (0..10).map(|k| (k, k as u64 * 100)) {
            assert_eq!(c.tick(&wire_at(k), t), None, "t={t}");
        }
        assert_eq!(c.tick(&wire_at(10), 999), None);
        let fired = c.tick(&wire_at(11), 1000).unwrap();
        assert_eq!(
            fired,
            FrozenPrefix {
                seed: Pixel::new(9, 0),
                len: 10
            }
        );
        assert!(c.last_wire().is_empty());
    }

    #[test]
    fn seed_only_prefix_never_fires() {
        let mut c = CoolingState::new(10);
        for t in 0..100u64 {
            let w = vec![Pixel::new(0, 0), Pixel::new(1, t as i32)];
            assert_eq!(c.tick(&w, t * 50), None);
        }
    }
}
