use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pixel;

/// Committed segments of one boundary, chained end to start.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    segments: Vec<Vec<Pixel>>,
    closed: bool,
}

impl Boundary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[Vec<Pixel>] {
        &self.segments
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn first_point(&self) -> Option<Pixel> {
        self.segments.first().and_then(|s| s.first().copied())
    }

    pub fn last_point(&self) -> Option<Pixel> {
        self.segments.last().and_then(|s| s.last().copied())
    }

    /// Appends a segment. It must start where the previous one ended and be
    /// 8-connected.
    pub fn push(&mut self, segment: Vec<Pixel>) -> Result<()> {
        if self.closed {
            return Err(Error::EngineState("boundary already closed"));
        }
        if segment.len() < 2 {
            return Err(Error::EngineState("segment needs at least two pixels"));
        }
        if let Some(end) = self.last_point() {
            if segment[0] != end {
                return Err(Error::EngineState(
                    "segment does not start at the previous end",
                ));
            }
        }
        if !segment.windows(2).all(|w| w[0].is_8_adjacent(w[1])) {
            return Err(Error::EngineState("segment is not 8-connected"));
        }
        self.segments.push(segment);
        Ok(())
    }

    /// Marks the boundary closed; the last segment must end at the first point.
    pub fn close(&mut self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::EngineState("no committed segments"));
        }
        if self.first_point() != self.last_point() {
            return Err(Error::EngineState(
                "boundary does not return to its first point",
            ));
        }
        self.closed = true;
        Ok(())
    }

    /// All points in order with shared junctions listed once. For a closed
    /// boundary the first point is repeated at the end.
    pub fn points(&self) -> Vec<Pixel> {
        let mut out: Vec<Pixel> = Vec::new();
        for seg in &self.segments {
            let skip = usize::from(!out.is_empty());
            out.extend_from_slice(&seg[skip..]);
        }
        out
    }

    /// The closed contour without the repeated end point.
    pub fn contour(&self) -> Vec<Pixel> {
        let mut pts = self.points();
        if self.closed && pts.len() > 1 {
            pts.pop();
        }
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: i32, y: i32) -> Pixel {
        Pixel::new(x, y)
    }

    #[test]
    fn chains_and_closes() {
        let mut b = Boundary::new();
        b.push(vec![p(0, 0), p(1, 0), p(2, 0)]).unwrap();
        assert!(b.push(vec![p(5, 5), p(5, 6)]).is_err());
        assert!(b.push(vec![p(2, 0), p(4, 0)]).is_err());
        b.push(vec![p(2, 0), p(2, 1), p(2, 2)]).unwrap();
        assert!(b.close().is_err());
        b.push(vec![p(2, 2), p(1, 1), p(0, 0)]).unwrap();
        b.close().unwrap();
        let pts = b.points();
        assert_eq!(pts.first(), pts.last());
        assert_eq!(pts.len(), 7);
        assert_eq!(b.contour().len(), 6);
        assert!(b.push(vec![p(0, 0), p(1, 0)]).is_err());
    }
}
