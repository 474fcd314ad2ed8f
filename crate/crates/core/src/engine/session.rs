use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, RecvTimeoutError, Sender, TryRecvError};
use serde::{Deserialize, Serialize};

use crate::cost::{CostWeights, HeatOverlay, StaticCostField};
use crate::engine::boundary::Boundary;
use crate::engine::cooling::CoolingState;
use crate::engine::search::{Search, SearchContext};
use crate::error::{Error, Result};
use crate::geometry::{Mask, Pixel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "pixel", rename_all = "snake_case")]
pub enum RequestKind {
    SetSeed(Pixel),
    SetTarget(Pixel),
    Commit,
    Close,
    HeatStep,
    Cancel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineRequest {
    pub seq: u64,
    pub kind: RequestKind,
}

impl EngineRequest {
    pub fn new(seq: u64, kind: RequestKind) -> Self {
        EngineRequest { seq, kind }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NoSeed,
    NoWire,
    NoSegments,
    EmptySegment,
    BoundaryInProgress,
    Closed,
    OutOfBounds,
    Unreachable,
    SeqOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryEvent {
    WireUpdated {
        seq: u64,
        points: Vec<Pixel>,
    },
    SegmentCommitted {
        seq: u64,
        points: Vec<Pixel>,
    },
    AutoSeed {
        seq: u64,
        pixel: Pixel,
    },
    BoundaryClosed {
        seq: u64,
        points: Vec<Pixel>,
    },
    SearchComplete {
        seq: u64,
    },
    Error {
        seq: u64,
        code: ErrorCode,
        message: String,
    },
}

impl BoundaryEvent {
    pub fn seq(&self) -> u64 {
        match *self {
            BoundaryEvent::WireUpdated { seq, .. }
            | BoundaryEvent::SegmentCommitted { seq, .. }
            | BoundaryEvent::AutoSeed { seq, .. }
            | BoundaryEvent::BoundaryClosed { seq, .. }
            | BoundaryEvent::SearchComplete { seq }
            | BoundaryEvent::Error { seq, .. } => seq,
        }
    }

    fn error(seq: u64, code: ErrorCode, message: impl Into<String>) -> Self {
        BoundaryEvent::Error {
            seq,
            code,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EngineConfig {
    pub weights: CostWeights,
    /// Cooling freeze time in ms; `None` disables cooling.
    pub freeze_after: Option<u64>,
    /// Automatic heating period in ms; `None` leaves heating to explicit steps.
    pub heat_period: Option<u64>,
}

/// Synchronous live-wire state machine. Each request yields the events it
/// causes; [`EngineSession`] runs one on a worker thread.
pub struct Engine {
    field: Arc<StaticCostField>,
    config: EngineConfig,
    mask: Option<Mask>,
    heat: HeatOverlay,
    search: Option<Search>,
    seed: Option<Pixel>,
    target: Option<Pixel>,
    wire: Option<Vec<Pixel>>,
    boundary: Boundary,
    cooling: Option<CoolingState>,
    last_heat_at: u64,
    last_seq: Option<u64>,
    complete_reported: bool,
}

type Step = std::result::Result<(), BoundaryEvent>;

impl Engine {
    pub fn new(field: Arc<StaticCostField>, config: EngineConfig) -> Result<Self> {
        config.weights.validate()?;
        let cooling = config.freeze_after.map(CoolingState::new);
        Ok(Engine {
            field,
            config,
            mask: None,
            heat: HeatOverlay::new(),
            search: None,
            seed: None,
            target: None,
            wire: None,
            boundary: Boundary::new(),
            cooling,
            last_heat_at: 0,
            last_seq: None,
            complete_reported: false,
        })
    }

    pub fn with_mask(mut self, mask: Mask) -> Result<Self> {
        if mask.width() != self.field.width() || mask.height() != self.field.height() {
            return Err(Error::InvalidArgument(
                "mask and cost field differ in size".into(),
            ));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn field(&self) -> &StaticCostField {
        &self.field
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn seed(&self) -> Option<Pixel> {
        self.seed
    }

    pub fn wire(&self) -> Option<&[Pixel]> {
        self.wire.as_deref()
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn heat(&self) -> &HeatOverlay {
        &self.heat
    }

    pub fn search(&self) -> Option<&Search> {
        self.search.as_ref()
    }

    fn ctx(&self) -> SearchContext<'_> {
        SearchContext::new(&self.field, &self.config.weights, &self.heat)
            .with_mask(self.mask.as_ref())
    }

    fn check_pixel(&self, seq: u64, p: Pixel) -> Step {
        if !self.field.contains(p) {
            return Err(BoundaryEvent::error(
                seq,
                ErrorCode::OutOfBounds,
                format!("{p:?} lies outside the image"),
            ));
        }
        if self.mask.as_ref().is_some_and(|m| !m.get(p)) {
            return Err(BoundaryEvent::error(
                seq,
                ErrorCode::OutOfBounds,
                format!("{p:?} lies outside the search mask"),
            ));
        }
        Ok(())
    }

    fn restart_search(&mut self) {
        let seed = self.seed.expect("seed set");
        let search = Search::new(&self.ctx(), seed).expect("seed validated on entry");
        self.search = Some(search);
        self.complete_reported = false;
    }

    fn trace(&mut self, seq: u64, target: Pixel) -> std::result::Result<Vec<Pixel>, BoundaryEvent> {
        self.check_pixel(seq, target)?;
        if self.search.is_none() {
            self.restart_search();
        }
        let ctx = SearchContext::new(&self.field, &self.config.weights, &self.heat)
            .with_mask(self.mask.as_ref());
        let search = self.search.as_mut().expect("search present");
        if !search.expand_until(&ctx, target) {
            return Err(BoundaryEvent::error(
                seq,
                ErrorCode::Unreachable,
                format!("{target:?} is not reachable from the seed"),
            ));
        }
        Ok(search.tree().reconstruct(target).expect("finalized"))
    }

    fn commit_segment(
        &mut self,
        seq: u64,
        points: Vec<Pixel>,
        events: &mut Vec<BoundaryEvent>,
    ) -> Step {
        if points.len() < 2 {
            return Err(BoundaryEvent::error(
                seq,
                ErrorCode::EmptySegment,
                "segment has a single pixel",
            ));
        }
        let end = *points.last().expect("non-empty");
        self.boundary
            .push(points.clone())
            .map_err(|e| BoundaryEvent::error(seq, ErrorCode::EmptySegment, e.to_string()))?;
        events.push(BoundaryEvent::SegmentCommitted { seq, points });
        self.seed = Some(end);
        self.wire = None;
        self.heat.reset();
        if let Some(c) = self.cooling.as_mut() {
            c.reset();
        }
        self.restart_search();
        Ok(())
    }

    fn publish_wire(
        &mut self,
        seq: u64,
        target: Pixel,
        now: u64,
        events: &mut Vec<BoundaryEvent>,
    ) -> Step {
        let wire = self.trace(seq, target)?;
        self.target = Some(target);
        self.wire = Some(wire.clone());
        events.push(BoundaryEvent::WireUpdated { seq, points: wire });
        self.cool(seq, now, events)
    }

    fn cool(&mut self, seq: u64, now: u64, events: &mut Vec<BoundaryEvent>) -> Step {
        let (Some(cooling), Some(wire)) = (self.cooling.as_mut(), self.wire.as_ref()) else {
            return Ok(());
        };
        let Some(frozen) = cooling.tick(wire, now) else {
            return Ok(());
        };
        let prefix = wire[..frozen.len].to_vec();
        let target = self.target.expect("wire implies target");
        events.push(BoundaryEvent::AutoSeed {
            seq,
            pixel: frozen.seed,
        });
        self.commit_segment(seq, prefix, events)?;
        self.target = Some(target);
        let wire = self.trace(seq, target)?;
        self.wire = Some(wire.clone());
        events.push(BoundaryEvent::WireUpdated { seq, points: wire });
        Ok(())
    }

    fn heat_step(&mut self, seq: u64, now: u64, events: &mut Vec<BoundaryEvent>) -> Step {
        let (Some(wire), Some(target)) = (self.wire.as_ref(), self.target) else {
            return Err(BoundaryEvent::error(
                seq,
                ErrorCode::NoWire,
                "heating needs a current wire",
            ));
        };
        self.heat
            .heat(wire, self.field.width(), self.field.height());
        self.last_heat_at = now;
        self.restart_search();
        let wire = self.trace(seq, target)?;
        self.wire = Some(wire.clone());
        events.push(BoundaryEvent::WireUpdated { seq, points: wire });
        Ok(())
    }

    fn reset(&mut self) {
        self.heat.reset();
        self.search = None;
        self.seed = None;
        self.target = None;
        self.wire = None;
        self.boundary = Boundary::new();
        if let Some(c) = self.cooling.as_mut() {
            c.reset();
        }
    }

    fn dispatch(&mut self, req: EngineRequest, now: u64, events: &mut Vec<BoundaryEvent>) -> Step {
        let seq = req.seq;
        if self.boundary.is_closed() && req.kind != RequestKind::Cancel {
            return Err(BoundaryEvent::error(
                seq,
                ErrorCode::Closed,
                "boundary is closed",
            ));
        }
        match req.kind {
            RequestKind::SetSeed(p) => {
                if !self.boundary.is_empty() {
                    return Err(BoundaryEvent::error(
                        seq,
                        ErrorCode::BoundaryInProgress,
                        "a boundary is in progress; commit, close or cancel it first",
                    ));
                }
                self.check_pixel(seq, p)?;
                self.reset();
                self.seed = Some(p);
                self.restart_search();
                Ok(())
            }
            RequestKind::SetTarget(p) => {
                if self.seed.is_none() {
                    return Err(BoundaryEvent::error(seq, ErrorCode::NoSeed, "no seed set"));
                }
                self.publish_wire(seq, p, now, events)
            }
            RequestKind::Commit => {
                if self.seed.is_none() {
                    return Err(BoundaryEvent::error(seq, ErrorCode::NoSeed, "no seed set"));
                }
                let Some(wire) = self.wire.take() else {
                    return Err(BoundaryEvent::error(
                        seq,
                        ErrorCode::NoWire,
                        "no live wire to commit",
                    ));
                };
                self.target = None;
                self.commit_segment(seq, wire, events)
            }
            RequestKind::Close => {
                let Some(first) = self.boundary.first_point() else {
                    return Err(BoundaryEvent::error(
                        seq,
                        ErrorCode::NoSegments,
                        "no committed segments",
                    ));
                };
                if self.seed != Some(first) {
                    let closing = self.trace(seq, first)?;
                    self.commit_segment(seq, closing, events)?;
                }
                self.boundary.close().expect("ends at first point");
                self.wire = None;
                self.target = None;
                self.search = None;
                events.push(BoundaryEvent::BoundaryClosed {
                    seq,
                    points: self.boundary.points(),
                });
                Ok(())
            }
            RequestKind::HeatStep => self.heat_step(seq, now, events),
            RequestKind::Cancel => {
                self.reset();
                Ok(())
            }
        }
    }

    /// Processes one request at time `now` (ms).
    pub fn handle(&mut self, req: EngineRequest, now: u64) -> Vec<BoundaryEvent> {
        if self.last_seq.is_some_and(|last| req.seq <= last) {
            return vec![BoundaryEvent::error(
                req.seq,
                ErrorCode::SeqOrder,
                format!(
                    "sequence number {} is not above {}",
                    req.seq,
                    self.last_seq.unwrap_or(0)
                ),
            )];
        }
        self.last_seq = Some(req.seq);
        let mut events = Vec::new();
        if let Err(e) = self.dispatch(req, now, &mut events) {
            events.push(e);
        }
        events
    }

    /// Timer-driven work: cooling of a static wire and periodic heating.
    pub fn tick(&mut self, now: u64) -> Vec<BoundaryEvent> {
        let mut events = Vec::new();
        let Some(seq) = self.last_seq else {
            return events;
        };
        if self.boundary.is_closed() || self.wire.is_none() {
            return events;
        }
        let result = self
            .cool(seq, now, &mut events)
            .and_then(|_| match self.config.heat_period {
                Some(period)
                    if self.wire.is_some() && now.saturating_sub(self.last_heat_at) >= period =>
                {
                    self.heat_step(seq, now, &mut events)
                }
                _ => Ok(()),
            });
        if let Err(e) = result {
            events.push(e);
        }
        events
    }

    pub fn has_idle_work(&self) -> bool {
        self.search.as_ref().is_some_and(|s| !s.is_complete())
            || (self.search.is_some() && !self.complete_reported)
    }

    /// Extends the current path tree by up to `budget` nodes in the background.
    pub fn idle(&mut self, budget: usize) -> Vec<BoundaryEvent> {
        let ctx = SearchContext::new(&self.field, &self.config.weights, &self.heat)
            .with_mask(self.mask.as_ref());
        let Some(search) = self.search.as_mut() else {
            return Vec::new();
        };
        search.expand(&ctx, budget);
        if search.is_complete() && !self.complete_reported {
            self.complete_reported = true;
            return vec![BoundaryEvent::SearchComplete {
                seq: self.last_seq.unwrap_or(0),
            }];
        }
        Vec::new()
    }
}

/// Keeps only the newest request of every run of consecutive targets.
pub fn coalesce_targets(batch: Vec<EngineRequest>) -> Vec<EngineRequest> {
    let mut out: Vec<EngineRequest> = Vec::with_capacity(batch.len());
    for req in batch {
        if let (Some(prev), RequestKind::SetTarget(_)) = (out.last(), req.kind) {
            if matches!(prev.kind, RequestKind::SetTarget(_)) {
                out.pop();
            }
        }
        out.push(req);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionOptions {
    /// Timer period for cooling and heating checks.
    pub tick: Duration,
    /// Nodes expanded per background step while idle.
    pub idle_budget: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            tick: Duration::from_millis(50),
            idle_budget: 4096,
        }
    }
}

enum Msg {
    Request(EngineRequest),
    Shutdown,
}

/// An [`Engine`] on its own worker thread. Requests are buffered; runs of
/// pending targets are coalesced so only the newest is answered.
pub struct EngineSession {
    tx: Sender<Msg>,
    worker: Option<JoinHandle<Engine>>,
}

impl EngineSession {
    /// Starts the worker; `sink` receives every event on the worker thread.
    pub fn spawn<F>(engine: Engine, options: SessionOptions, mut sink: F) -> Self
    where
        F: FnMut(BoundaryEvent) + Send + 'static,
    {
        let (tx, rx) = crossbeam_channel::unbounded();
        let worker = std::thread::spawn(move || {
            let mut engine = engine;
            run_worker(&mut engine, &rx, options, &mut sink);
            engine
        });
        EngineSession {
            tx,
            worker: Some(worker),
        }
    }

    /// Like [`spawn`](Self::spawn) with events delivered to a channel.
    pub fn spawn_channel(
        engine: Engine,
        options: SessionOptions,
    ) -> (Self, Receiver<BoundaryEvent>) {
        let (etx, erx) = crossbeam_channel::unbounded();
        let session = Self::spawn(engine, options, move |e| {
            let _ = etx.send(e);
        });
        (session, erx)
    }

    /// Enqueues a request without blocking.
    pub fn submit(&self, req: EngineRequest) -> Result<()> {
        if self.worker.as_ref().is_none_or(|w| w.is_finished()) {
            return Err(Error::SessionClosed);
        }
        self.tx
            .send(Msg::Request(req))
            .map_err(|_| Error::SessionClosed)
    }

    /// Processes everything already submitted, stops the worker and returns
    /// the engine.
    pub fn shutdown(mut self) -> Engine {
        self.stop().expect("worker joined once")
    }

    fn stop(&mut self) -> Option<Engine> {
        let worker = self.worker.take()?;
        let _ = self.tx.send(Msg::Shutdown);
        worker.join().ok()
    }
}

impl Drop for EngineSession {
    fn drop(&mut self) {
        self.stop();
    }
}

fn run_worker<F: FnMut(BoundaryEvent)>(
    engine: &mut Engine,
    rx: &Receiver<Msg>,
    options: SessionOptions,
    sink: &mut F,
) {
    let start = Instant::now();
    let now = || start.elapsed().as_millis() as u64;
    let mut last_tick = 0;
    loop {
        let first = if engine.has_idle_work() {
            match rx.try_recv() {
                Ok(m) => m,
                Err(TryRecvError::Empty) => {
                    engine
                        .idle(options.idle_budget)
                        .into_iter()
                        .for_each(&mut *sink);
                    if now().saturating_sub(last_tick) >= options.tick.as_millis() as u64 {
                        last_tick = now();
                        engine.tick(last_tick).into_iter().for_each(&mut *sink);
                    }
                    continue;
                }
                Err(TryRecvError::Disconnected) => return,
            }
        } else {
            match rx.recv_timeout(options.tick) {
                Ok(m) => m,
                Err(RecvTimeoutError::Timeout) => {
                    last_tick = now();
                    engine.tick(last_tick).into_iter().for_each(&mut *sink);
                    continue;
                }
                Err(RecvTimeoutError::Disconnected) => return,
            }
        };
        let mut batch = Vec::new();
        let mut stop = false;
        for msg in std::iter::once(first).chain(rx.try_iter()) {
            match msg {
                Msg::Request(r) => batch.push(r),
                Msg::Shutdown => {
                    stop = true;
                    break;
                }
            }
        }
        for req in coalesce_targets(batch) {
            engine.handle(req, now()).into_iter().for_each(&mut *sink);
        }
        if stop {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: i32, y: i32) -> Pixel {
        Pixel::new(x, y)
    }

    fn uniform_engine(w: usize, h: usize) -> Engine {
        let f = StaticCostField::from_costs(w, h, vec![20; w * h]).unwrap();
        Engine::new(Arc::new(f), EngineConfig::default()).unwrap()
    }

    fn req(seq: u64, kind: RequestKind) -> EngineRequest {
        EngineRequest::new(seq, kind)
    }

    #[test]
    fn seed_then_target_gives_one_wire() {
        let mut e = uniform_engine(10, 10);
        assert!(e
            .handle(req(1, RequestKind::SetSeed(p(1, 1))), 0)
            .is_empty());
        let ev = e.handle(req(2, RequestKind::SetTarget(p(5, 1))), 0);
        assert_eq!(ev.len(), 1);
        let BoundaryEvent::WireUpdated { seq, points } = &ev[0] else {
            panic!("{ev:?}")
        };
        assert_eq!(*seq, 2);
        assert_eq!(points.first(), Some(&p(1, 1)));
        assert_eq!(points.last(), Some(&p(5, 1)));
    }

    #[test]
    fn commit_without_seed_is_an_error_event() {
        let mut e = uniform_engine(5, 5);
        let ev = e.handle(req(1, RequestKind::Commit), 0);
        assert!(matches!(
            ev[..],
            [BoundaryEvent::Error {
                seq: 1,
                code: ErrorCode::NoSeed,
                ..
            }]
        ));
        let ev = e.handle(req(2, RequestKind::SetTarget(p(1, 1))), 0);
        assert!(matches!(
            ev[..],
            [BoundaryEvent::Error {
                code: ErrorCode::NoSeed,
                ..
            }]
        ));
    }

    #[test]
    fn close_with_zero_segments_is_an_error() {
        let mut e = uniform_engine(5, 5);
        e.handle(req(1, RequestKind::SetSeed(p(0, 0))), 0);
        let ev = e.handle(req(2, RequestKind::Close), 0);
        assert!(matches!(
            ev[..],
            [BoundaryEvent::Error {
                code: ErrorCode::NoSegments,
                ..
            }]
        ));
    }

    #[test]
    fn three_quarter_square_closes_into_loop() {
        let mut e = uniform_engine(12, 12);
        e.handle(req(1, RequestKind::SetSeed(p(2, 2))), 0);
        e.handle(req(2, RequestKind::SetTarget(p(9, 2))), 0);
        e.handle(req(3, RequestKind::Commit), 0);
        e.handle(req(4, RequestKind::SetTarget(p(9, 9))), 0);
        e.handle(req(5, RequestKind::Commit), 0);
        let ev = e.handle(req(6, RequestKind::Close), 0);
        let closed = ev.iter().find_map(|e| match e {
            BoundaryEvent::BoundaryClosed { points, .. } => Some(points.clone()),
            _ => None,
        });
        let pts = closed.expect("closed");
        assert_eq!(pts.first(), pts.last());
        assert_eq!(pts[0], p(2, 2));
        assert_eq!(e.boundary().segments().len(), 3);
        assert!(pts.windows(2).all(|w| w[0].is_8_adjacent(w[1])));
        let after = e.handle(req(7, RequestKind::SetTarget(p(3, 3))), 0);
        assert!(matches!(
            after[..],
            [BoundaryEvent::Error {
                code: ErrorCode::Closed,
                ..
            }]
        ));
    }

    #[test]
    fn close_after_one_segment_gives_two_segment_loop() {
        let mut e = uniform_engine(8, 8);
        e.handle(req(1, RequestKind::SetSeed(p(1, 1))), 0);
        e.handle(req(2, RequestKind::SetTarget(p(6, 4))), 0);
        e.handle(req(3, RequestKind::Commit), 0);
        e.handle(req(4, RequestKind::Close), 0);
        assert!(e.boundary().is_closed());
        assert_eq!(e.boundary().segments().len(), 2);
    }

    #[test]
    fn heat_requires_wire_and_commit_resets_heat() {
        let mut e = uniform_engine(8, 8);
        e.handle(req(1, RequestKind::SetSeed(p(1, 1))), 0);
        let ev = e.handle(req(2, RequestKind::HeatStep), 0);
        assert!(matches!(
            ev[..],
            [BoundaryEvent::Error {
                code: ErrorCode::NoWire,
                ..
            }]
        ));
        e.handle(req(3, RequestKind::SetTarget(p(6, 1))), 0);
        let ev = e.handle(req(4, RequestKind::HeatStep), 0);
        assert!(matches!(
            ev[..],
            [BoundaryEvent::WireUpdated { seq: 4, .. }]
        ));
        assert_eq!(e.heat().level, 1);
        e.handle(req(5, RequestKind::Commit), 0);
        assert_eq!(e.heat().level, 0);
    }

    #[test]
    fn stale_sequence_numbers_rejected() {
        let mut e = uniform_engine(5, 5);
        e.handle(req(5, RequestKind::SetSeed(p(0, 0))), 0);
        let ev = e.handle(req(5, RequestKind::SetTarget(p(1, 0))), 0);
        assert!(matches!(
            ev[..],
            [BoundaryEvent::Error {
                code: ErrorCode::SeqOrder,
                ..
            }]
        ));
    }

    #[test]
    fn cooling_auto_seeds_a_static_wire() {
        let f = StaticCostField::from_costs(20, 5, vec![20; 100]).unwrap();
        let config = EngineConfig {
            freeze_after: Some(100),
            ..Default::default()
        };
        let mut e = Engine::new(Arc::new(f), config).unwrap();
        e.handle(req(1, RequestKind::SetSeed(p(0, 2))), 0);
        assert!(e.handle(req(2, RequestKind::SetTarget(p(10, 2))), 0).len() == 1);
        assert!(e.tick(99).is_empty());
        let ev = e.tick(100);
        assert!(matches!(ev[0], BoundaryEvent::AutoSeed { pixel, .. } if pixel == p(10, 2)));
        assert_eq!(e.boundary().segments().len(), 1);
        assert_eq!(e.seed(), Some(p(10, 2)));
    }

    #[test]
    fn coalescing_keeps_last_of_each_target_run() {
        let t = |s, x| req(s, RequestKind::SetTarget(p(x, 0)));
        let batch = vec![
            t(1, 1),
            t(2, 2),
            req(3, RequestKind::Commit),
            t(4, 3),
            t(5, 4),
            t(6, 5),
        ];
        let out = coalesce_targets(batch);
        let seqs: Vec<u64> = out.iter().map(|r| r.seq).collect();
        assert_eq!(seqs, vec![2, 3, 6]);
    }

    #[test]
    fn threaded_session_answers_last_target() {
        let (session, events) =
            EngineSession::spawn_channel(uniform_engine(64, 64), SessionOptions::default());
        session
            .submit(req(1, RequestKind::SetSeed(p(0, 0))))
            .unwrap();
        for i in 0..100u64 {
            session
                .submit(req(2 + i, RequestKind::SetTarget(p((i % 64) as i32, 63))))
                .unwrap();
        }
        session.shutdown();
        let got: Vec<BoundaryEvent> = events.try_iter().collect();
        let seqs: Vec<u64> = got.iter().map(BoundaryEvent::seq).collect();
        assert!(seqs.windows(2).all(|w| w[0] <= w[1]));
        let last_wire = got
            .iter()
            .rev()
            .find_map(|e| match e {
                BoundaryEvent::WireUpdated { seq, points } => Some((*seq, points.clone())),
                _ => None,
            })
            .unwrap();
        assert_eq!(last_wire.0, 101);
        assert_eq!(last_wire.1.last(), Some(&p(35, 63)));
    }

    #[test]
    fn submit_after_shutdown_fails() {
        let (session, _events) =
            EngineSession::spawn_channel(uniform_engine(5, 5), SessionOptions::default());
        let engine = session.shutdown();
        assert!(engine.seed().is_none());
    }
}
