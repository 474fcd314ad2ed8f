//! Per-connection session: loaded volume, the slice and cut engines, paint
//! strokes, trained mapping and the last 3D result. Messages are handled
//! synchronously in arrival order; [`run_session`] drives one session from a
//! channel on its own thread.

use std::sync::atomic::AtomicBool;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use livewire_core::cost::{
    static_cost, train_mapping, CostWeights, StaticCostField, TrainedMapping,
};
use livewire_core::engine::{
    BoundaryEvent, Engine, EngineConfig, EngineRequest, RequestKind, DEFAULT_FREEZE_AFTER_MS,
};
use livewire_core::image_ops::{build_orthogonal_cut, CutLine};
use livewire_core::lw3d::{
    segment_volume_with, CutSpec, CutsFile, SegmentOptions, SegmentSpec, StripParams, SweepHooks,
    DEFAULT_WIGGLE_RADIUS,
};
use livewire_core::mesh::{default_arc_window_frac, reconstruct, DEFAULT_SAMPLES};
use livewire_core::volume::load_volume;
use livewire_core::{ContourSet, Error, Image, Mask, Pixel, Point2, Volume};

use crate::protocol::{
    coalesce_cursors, engine_error_code, image_payload, ClientMessage, CutAction, CutRef, Envelope,
    OptionsPatch, Segment3dOptions, SegmentRequest, ServerEvent,
};

/// Nodes expanded per idle step between messages.
pub const IDLE_BUDGET: usize = 4096;
/// Longest wait for a message before timers are serviced.
pub const TICK: Duration = Duration::from_millis(50);

/// User-adjustable settings of a session.
#[derive(Clone, Debug, PartialEq)]
pub struct OptionsState {
    pub w_g: f64,
    pub w_l: f64,
    pub w_d: f64,
    pub w_s: f64,
    pub cooling: bool,
    pub freeze_after: u64,
    pub heating: bool,
    pub heat_period: u64,
    pub safety_factor: f64,
    pub brush_sizes: Vec<usize>,
    pub samples: usize,
    pub arc_window_frac: f64,
}

impl Default for OptionsState {
    fn default() -> Self {
        OptionsState {
            w_g: 0.5,
            w_l: 0.5,
            w_d: 0.0,
            w_s: 0.0,
            cooling: false,
            freeze_after: DEFAULT_FREEZE_AFTER_MS,
            heating: false,
            heat_period: 500,
            safety_factor: 1.5,
            brush_sizes: vec![1, 3, 5, 9],
            samples: DEFAULT_SAMPLES,
            arc_window_frac: default_arc_window_frac(DEFAULT_SAMPLES),
        }
    }
}

impl OptionsState {
    pub fn weights(&self, trained: bool) -> livewire_core::Result<CostWeights> {
        let mut w = CostWeights::new(self.w_g, self.w_l, self.w_d, self.w_s)?;
        w.use_training = trained;
        Ok(w)
    }

    pub fn engine_config(&self, trained: bool) -> livewire_core::Result<EngineConfig> {
        Ok(EngineConfig {
            weights: self.weights(trained)?,
            freeze_after: self.cooling.then_some(self.freeze_after),
            heat_period: self.heating.then_some(self.heat_period),
        })
    }

    /// Applies `patch` atomically: nothing changes unless the result is valid.
    pub fn apply(&mut self, patch: &OptionsPatch) -> livewire_core::Result<()> {
        let mut next = self.clone();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = patch.$f.clone() { next.$f = v; })* };
        }
        take!(
            w_g,
            w_l,
            w_d,
            w_s,
            cooling,
            freeze_after,
            heating,
            heat_period,
            safety_factor,
            brush_sizes,
            samples,
            arc_window_frac
        );
        next.weights(false)?;
        StripParams::new(next.safety_factor)?;
        if next.brush_sizes.is_empty() || next.brush_sizes.contains(&0) {
            return Err(Error::InvalidArgument(
                "brush sizes must be a non-empty list of positive sizes".into(),
            ));
        }
        if next.samples < 3 {
            return Err(Error::InvalidArgument(format!(
                "mesh needs at least 3 samples per contour, got {}",
                next.samples
            )));
        }
        if !(next.arc_window_frac > 0.0 && next.arc_window_frac <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "arc window fraction {} outside (0, 0.5]",
                next.arc_window_frac
            )));
        }
        if next.heat_period == 0 {
            return Err(Error::InvalidArgument(
                "heating period must be positive".into(),
            ));
        }
        *self = next;
        Ok(())
    }
}

struct SliceState {
    index: usize,
    field: Arc<StaticCostField>,
    engine: Engine,
    paint: Mask,
}

struct CutState {
    cut: CutLine,
    engine: Engine,
    boundary: Option<Vec<Pixel>>,
}

type Reply = std::result::Result<(), ServerEvent>;

fn fail(seq: u64, e: Error) -> ServerEvent {
    ServerEvent::from_core_error(Some(seq), &e)
}

fn translate(ev: BoundaryEvent, cut_id: Option<usize>) -> Option<ServerEvent> {
    Some(match ev {
        BoundaryEvent::WireUpdated { seq, points } => ServerEvent::Wire {
            seq,
            points,
            cut_id,
        },
        BoundaryEvent::SegmentCommitted { seq, points } => ServerEvent::SegmentCommitted {
            seq,
            points,
            cut_id,
        },
        BoundaryEvent::AutoSeed { seq, pixel } => ServerEvent::AutoSeed {
            seq,
            x: pixel.x,
            y: pixel.y,
            cut_id,
        },
        BoundaryEvent::BoundaryClosed { seq, points } => ServerEvent::BoundaryClosed {
            seq,
            points,
            cut_id,
        },
        BoundaryEvent::SearchComplete { .. } => return None,
        BoundaryEvent::Error { seq, code, message } => {
            ServerEvent::error(Some(seq), engine_error_code(code), message)
        }
    })
}

pub struct Session {
    options: OptionsState,
    volume: Option<Volume>,
    slice: Option<SliceState>,
    mapping: Option<TrainedMapping>,
    cut_start: Option<Point2>,
    cuts: Vec<CutState>,
    contours: Option<ContourSet>,
    last_seq: Option<u64>,
    cancel: Arc<AtomicBool>,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(Arc::new(AtomicBool::new(false)))
    }
}

impl Session {
    /// `cancel` aborts a running 3D segmentation when set.
    pub fn new(cancel: Arc<AtomicBool>) -> Self {
        Session {
            options: OptionsState::default(),
            volume: None,
            slice: None,
            mapping: None,
            cut_start: None,
            cuts: Vec::new(),
            contours: None,
            last_seq: None,
            cancel,
        }
    }

    pub fn options(&self) -> &OptionsState {
        &self.options
    }

    pub fn mapping(&self) -> Option<&TrainedMapping> {
        self.mapping.as_ref()
    }

    /// Handles one message at time `now` (ms). Every message yields at least
    /// one event; messages without a natural reply are acknowledged.
    pub fn handle(&mut self, env: Envelope, now: u64, out: &mut dyn FnMut(ServerEvent)) {
        let seq = env.seq;
        if let Some(last) = self.last_seq.filter(|&last| seq <= last) {
            out(ServerEvent::error(
                Some(seq),
                "seq_order",
                format!("sequence number {seq} is not above {last}"),
            ));
            return;
        }
        self.last_seq = Some(seq);
        let mut sent = 0usize;
        let mut counted = |ev: ServerEvent| {
            sent += 1;
            out(ev)
        };
        if let Err(ev) = self.dispatch(seq, env.message, now, &mut counted) {
            counted(ev);
        }
        if sent == 0 {
            out(ServerEvent::Ack { seq });
        }
    }

    /// Timer work of every engine: cooling and periodic heating.
    pub fn tick(&mut self, now: u64, out: &mut dyn FnMut(ServerEvent)) {
        if let Some(s) = self.slice.as_mut() {
            s.engine
                .tick(now)
                .into_iter()
                .filter_map(|e| translate(e, None))
                .for_each(&mut *out);
        }
        for (id, c) in self.cuts.iter_mut().enumerate() {
            let events = c.engine.tick(now);
            Self::record_cut_boundary(c, &events);
            events
                .into_iter()
                .filter_map(|e| translate(e, Some(id)))
                .for_each(&mut *out);
        }
    }

    pub fn has_idle_work(&self) -> bool {
        self.slice
            .as_ref()
            .is_some_and(|s| s.engine.has_idle_work())
            || self.cuts.iter().any(|c| c.engine.has_idle_work())
    }

    /// Grows the pending path trees in the background.
    pub fn idle(&mut self, budget: usize) {
        if let Some(s) = self.slice.as_mut().filter(|s| s.engine.has_idle_work()) {
            s.engine.idle(budget);
            return;
        }
        if let Some(c) = self.cuts.iter_mut().find(|c| c.engine.has_idle_work()) {
            c.engine.idle(budget);
        }
    }

    fn volume(&self, seq: u64) -> std::result::Result<&Volume, ServerEvent> {
        self.volume
            .as_ref()
            .ok_or_else(|| ServerEvent::error(Some(seq), "no_volume", "no volume loaded"))
    }

    fn slice_mut(&mut self, seq: u64) -> std::result::Result<&mut SliceState, ServerEvent> {
        self.slice
            .as_mut()
            .ok_or_else(|| ServerEvent::error(Some(seq), "no_slice", "no slice selected"))
    }

    fn build_slice(&self, index: usize) -> livewire_core::Result<SliceState> {
        let v = self.volume.as_ref().expect("checked by caller");
        let img = v.slice_of(index)?;
        let trained = self.mapping.is_some();
        let field = Arc::new(static_cost(
            &img,
            &self.options.weights(trained)?,
            self.mapping.as_ref(),
        )?);
        let engine = Engine::new(field.clone(), self.options.engine_config(trained)?)?;
        Ok(SliceState {
            index,
            field,
            engine,
            paint: Mask::new(img.width(), img.height()),
        })
    }

    /// Rebuilds the slice cost field and engine, keeping the paint strokes.
    fn rebuild_slice(&mut self) -> livewire_core::Result<()> {
        let Some(old) = self.slice.as_ref() else {
            return Ok(());
        };
        let (index, paint) = (old.index, old.paint.clone());
        let mut fresh = self.build_slice(index)?;
        fresh.paint = paint;
        self.slice = Some(fresh);
        Ok(())
    }

    fn record_cut_boundary(c: &mut CutState, events: &[BoundaryEvent]) {
        if events.iter().any(|e| {
            matches!(
                e,
                BoundaryEvent::SegmentCommitted { .. } | BoundaryEvent::BoundaryClosed { .. }
            )
        }) {
            c.boundary = Some(c.engine.boundary().points());
        }
    }

    fn engine_request(kind: RequestKind, seq: u64) -> EngineRequest {
        EngineRequest::new(seq, kind)
    }

    fn dispatch(
        &mut self,
        seq: u64,
        msg: ClientMessage,
        now: u64,
        out: &mut dyn FnMut(ServerEvent),
    ) -> Reply {
        let slice_request = |kind| Some(Self::engine_request(kind, seq));
        let req = match &msg {
            ClientMessage::Seed { x, y } => slice_request(RequestKind::SetSeed(Pixel::new(*x, *y))),
            ClientMessage::Cursor { x, y } => {
                slice_request(RequestKind::SetTarget(Pixel::new(*x, *y)))
            }
            ClientMessage::Commit {} => slice_request(RequestKind::Commit),
            ClientMessage::Close {} => slice_request(RequestKind::Close),
            ClientMessage::Heat {} => slice_request(RequestKind::HeatStep),
            ClientMessage::Cancel {} => slice_request(RequestKind::Cancel),
            _ => None,
        };
        if let Some(req) = req {
            let s = self.slice_mut(seq)?;
            s.engine
                .handle(req, now)
                .into_iter()
                .filter_map(|e| translate(e, None))
                .for_each(out);
            return Ok(());
        }
        match msg {
            ClientMessage::Load { path } => {
                let v = load_volume(&path).map_err(|e| fail(seq, e))?;
                out(ServerEvent::Volume {
                    seq,
                    width: v.width(),
                    height: v.height(),
                    depth: v.depth(),
                });
                self.volume = Some(v);
                self.slice = None;
                self.mapping = None;
                self.cut_start = None;
                self.cuts.clear();
                self.contours = None;
            }
            ClientMessage::SelectSlice { index } => {
                self.volume(seq)?;
                let state = self.build_slice(index).map_err(|e| fail(seq, e))?;
                let img = self
                    .volume
                    .as_ref()
                    .expect("checked")
                    .slice_of(index)
                    .map_err(|e| fail(seq, e))?;
                out(ServerEvent::Slice {
                    seq,
                    index,
                    width: img.width(),
                    height: img.height(),
                    data: image_payload(&img),
                });
                self.slice = Some(state);
            }
            ClientMessage::Paint { points, brush } => {
                if !self.options.brush_sizes.contains(&brush) {
                    return Err(ServerEvent::error(
                        Some(seq),
                        "invalid_argument",
                        format!("brush {brush} is not one of {:?}", self.options.brush_sizes),
                    ));
                }
                let s = self.slice_mut(seq)?;
                paint_disks(&mut s.paint, &points, brush);
            }
            ClientMessage::ClearPaint {} => {
                let s = self.slice_mut(seq)?;
                s.paint = Mask::new(s.paint.width(), s.paint.height());
            }
            ClientMessage::Train {} => {
                let s = self.slice_mut(seq)?;
                let samples = s.field.training_samples(&s.paint);
                let mapping = train_mapping(&samples).map_err(|e| fail(seq, e))?;
                let previous = self.mapping.replace(mapping);
                if let Err(e) = self.rebuild_slice() {
                    self.mapping = previous;
                    return Err(fail(seq, e));
                }
            }
            ClientMessage::ViewCosts {} => {
                let s = self.slice_mut(seq)?;
                let img = s.field.to_image();
                out(ServerEvent::Costs {
                    seq,
                    width: img.width(),
                    height: img.height(),
                    data: image_payload(&img),
                });
            }
            ClientMessage::CutBegin { x, y } => {
                let v = self.volume(seq)?;
                let p = Point2::new(x, y);
                if !(x >= 0.0
                    && y >= 0.0
                    && x <= (v.width() - 1) as f64
                    && y <= (v.height() - 1) as f64)
                {
                    return Err(fail(seq, Error::PointOutOfBounds { x, y }));
                }
                self.cut_start = Some(p);
            }
            ClientMessage::CutEnd { x, y } => {
                self.volume(seq)?;
                let Some(p0) = self.cut_start else {
                    return Err(ServerEvent::error(
                        Some(seq),
                        "no_cut",
                        "cut_end without cut_begin",
                    ));
                };
                let (cut, img, engine) = self
                    .build_cut(p0, Point2::new(x, y))
                    .map_err(|e| fail(seq, e))?;
                self.cut_start = None;
                let cut_id = self.cuts.len();
                out(ServerEvent::CutImage {
                    seq,
                    cut_id,
                    width: img.width(),
                    height: img.height(),
                    data: image_payload(&img),
                });
                self.cuts.push(CutState {
                    cut,
                    engine,
                    boundary: None,
                });
            }
            ClientMessage::SegmentCut {
                cut_id,
                action,
                x,
                y,
            } => {
                let Some(c) = self.cuts.get_mut(cut_id) else {
                    return Err(ServerEvent::error(
                        Some(seq),
                        "no_cut",
                        format!("no cut with id {cut_id}"),
                    ));
                };
                let point = || match (x, y) {
                    (Some(x), Some(y)) => Ok(Pixel::new(x, y)),
                    _ => Err(ServerEvent::error(
                        Some(seq),
                        "bad_message",
                        "seed and cursor actions need x and y",
                    )),
                };
                let kind = match action {
                    CutAction::Seed => RequestKind::SetSeed(point()?),
                    CutAction::Cursor => RequestKind::SetTarget(point()?),
                    CutAction::Commit => RequestKind::Commit,
                    CutAction::Close => RequestKind::Close,
                    CutAction::Heat => RequestKind::HeatStep,
                    CutAction::Cancel => RequestKind::Cancel,
                };
                let events = c.engine.handle(Self::engine_request(kind, seq), now);
                Self::record_cut_boundary(c, &events);
                if action == CutAction::Cancel {
                    c.boundary = None;
                }
                events
                    .into_iter()
                    .filter_map(|e| translate(e, Some(cut_id)))
                    .for_each(out);
            }
            ClientMessage::Segment3d { segments, options } => {
                let contours = self.segment3d(seq, &segments, &options, out)?;
                out(ServerEvent::Contours {
                    seq,
                    contours: contours.clone(),
                });
                self.contours = Some(contours);
            }
            ClientMessage::SetOptions(patch) => {
                let before = self.options.clone();
                self.options.apply(&patch).map_err(|e| fail(seq, e))?;
                let o = &self.options;
                let engine_changed = (
                    o.w_g,
                    o.w_l,
                    o.w_d,
                    o.w_s,
                    o.cooling,
                    o.freeze_after,
                    o.heating,
                    o.heat_period,
                ) != (
                    before.w_g,
                    before.w_l,
                    before.w_d,
                    before.w_s,
                    before.cooling,
                    before.freeze_after,
                    before.heating,
                    before.heat_period,
                );
                if engine_changed {
                    if let Err(e) = self.rebuild_slice() {
                        self.options = before;
                        return Err(fail(seq, e));
                    }
                }
            }
            ClientMessage::GetMesh { samples } => {
                let Some(contours) = self.contours.as_ref() else {
                    return Err(ServerEvent::error(
                        Some(seq),
                        "no_contours",
                        "run segment3d first",
                    ));
                };
                let m = samples.unwrap_or(self.options.samples);
                let frac = if samples.is_some() {
                    default_arc_window_frac(m)
                } else {
                    self.options.arc_window_frac
                };
                let mesh = reconstruct(contours, m, frac).map_err(|e| fail(seq, e))?;
                out(ServerEvent::Mesh {
                    seq,
                    obj_text: mesh.to_obj(),
                });
            }
            ClientMessage::Seed { .. }
            | ClientMessage::Cursor { .. }
            | ClientMessage::Commit {}
            | ClientMessage::Close {}
            | ClientMessage::Heat {}
            | ClientMessage::Cancel {} => unreachable!("routed to the slice engine"),
        }
        Ok(())
    }

    fn build_cut(&self, p0: Point2, p1: Point2) -> livewire_core::Result<(CutLine, Image, Engine)> {
        let v = self.volume.as_ref().expect("checked by caller");
        let cut = CutLine::new(p0, p1)?;
        let img = build_orthogonal_cut(v, &cut)?;
        // Cut images have their own intensity statistics, so the slice
        // mapping is not applied to them.
        let field = Arc::new(static_cost(&img, &self.options.weights(false)?, None)?);
        let engine = Engine::new(field, self.options.engine_config(false)?)?;
        Ok((cut, img, engine))
    }

    fn segment3d(
        &self,
        seq: u64,
        segments: &[SegmentRequest],
        options: &Segment3dOptions,
        out: &mut dyn FnMut(ServerEvent),
    ) -> std::result::Result<ContourSet, ServerEvent> {
        let v = self.volume(seq)?;
        let mut specs = Vec::with_capacity(segments.len());
        for s in segments {
            let mut cuts = Vec::with_capacity(s.cuts.len());
            for c in &s.cuts {
                cuts.push(match c {
                    CutRef::Inline(spec) => spec.clone(),
                    CutRef::Id(id) => {
                        let state = self.cuts.get(*id).ok_or_else(|| {
                            ServerEvent::error(Some(seq), "no_cut", format!("no cut with id {id}"))
                        })?;
                        let boundary = state.boundary.clone().ok_or_else(|| {
                            ServerEvent::error(
                                Some(seq),
                                "no_cut",
                                format!("cut {id} has no committed boundary"),
                            )
                        })?;
                        CutSpec {
                            p0: state.cut.p0,
                            p1: state.cut.p1,
                            boundary: Some(boundary),
                        }
                    }
                });
            }
            specs.push(SegmentSpec {
                first: s.first,
                last: s.last,
                cuts,
            });
        }
        let segs = CutsFile { segments: specs }
            .to_segments()
            .map_err(|e| fail(seq, e))?;
        let opts = SegmentOptions {
            strip: StripParams::new(options.safety_factor.unwrap_or(self.options.safety_factor))
                .map_err(|e| fail(seq, e))?,
            wiggle_radius: options.wiggle_radius.unwrap_or(DEFAULT_WIGGLE_RADIUS),
            use_strip: options.use_strip.unwrap_or(true),
            exhaustive: false,
        };
        let weights = self
            .options
            .weights(self.mapping.is_some())
            .map_err(|e| fail(seq, e))?;
        let mut progress = |done: usize, total: usize, r: &livewire_core::lw3d::SliceReport| {
            out(ServerEvent::Progress {
                seq,
                slice: r.slice,
                done,
                total,
            })
        };
        let hooks = SweepHooks {
            progress: Some(&mut progress),
            cancel: Some(&self.cancel),
        };
        let result = segment_volume_with(v, &segs, &weights, self.mapping.as_ref(), &opts, hooks)
            .map_err(|e| fail(seq, e))?;
        Ok(result.contours)
    }
}

/// Marks every pixel within `brush / 2` of a stroke point.
fn paint_disks(mask: &mut Mask, points: &[Pixel], brush: usize) {
    let r = brush as f64 / 2.0;
    let reach = r.floor() as i32;
    for p in points {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let q = Pixel::new(p.x + dx, p.y + dy);
                if ((dx * dx + dy * dy) as f64) <= r * r && mask.contains(q) {
                    mask.set(q, true);
                }
            }
        }
    }
}

/// Inbound item of a session thread: a decoded message or an error event
/// to forward in order.
pub type Inbound = std::result::Result<Envelope, ServerEvent>;

/// Serves `session` from `rx` until the channel closes. Cursor runs that
/// queued up while the session was busy are coalesced; timers run every
/// [`TICK`] and path trees grow while the channel is quiet.
pub fn run_session(mut session: Session, rx: Receiver<Inbound>, mut out: impl FnMut(ServerEvent)) {
    let start = Instant::now();
    let now = || start.elapsed().as_millis() as u64;
    loop {
        let wait = if session.has_idle_work() {
            Duration::ZERO
        } else {
            TICK
        };
        match rx.recv_timeout(wait) {
            Ok(first) => {
                let mut batch = vec![first];
                batch.extend(rx.try_iter());
                for item in coalesce_cursors(batch) {
                    match item {
                        Ok(env) => session.handle(env, now(), &mut out),
                        Err(ev) => out(ev),
                    }
                }
            }
            Err(RecvTimeoutError::Timeout) => {
                if session.has_idle_work() {
                    session.idle(IDLE_BUDGET);
                }
            }
            Err(RecvTimeoutError::Disconnected) => return,
        }
        session.tick(now(), &mut out);
    }
}

/// Replays a client log (one message per line, optional virtual time `t`
/// in ms) against a fresh session. Timers advance only with `t`, so the
/// output depends on the log alone.
pub fn replay(log: &str) -> Vec<ServerEvent> {
    let mut session = Session::default();
    let mut events = Vec::new();
    let mut out = |ev: ServerEvent| events.push(ev);
    let mut clock = 0u64;
    for line in log.lines().filter(|l| !l.trim().is_empty()) {
        match crate::protocol::parse_envelope(line) {
            Ok(env) => {
                clock = clock.max(env.time_ms.unwrap_or(clock));
                session.tick(clock, &mut out);
                session.handle(env, clock, &mut out);
            }
            Err(ev) => out(ev),
        }
    }
    events
}
