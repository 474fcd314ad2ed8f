//! JSON messages exchanged with interactive clients. Every message is an
//! object with a `type` discriminator; client messages also carry `seq`.

use base64::Engine as _;
use livewire_core::engine::ErrorCode;
use livewire_core::lw3d::CutSpec;
use livewire_core::volume::encode_pgm;
use livewire_core::{ContourSet, Error, Image, Pixel};
use serde::{Deserialize, Serialize};

/// Largest accepted client message in bytes.
pub const MAX_MESSAGE_BYTES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutAction {
    Seed,
    Cursor,
    Commit,
    Close,
    Heat,
    Cancel,
}

/// A cut of a 3D job: an interactively segmented cut by id, or a full
/// definition with its boundary.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CutRef {
    Id(usize),
    Inline(CutSpec),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SegmentRequest {
    pub first: usize,
    pub last: usize,
    pub cuts: Vec<CutRef>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
pub struct Segment3dOptions {
    pub safety_factor: Option<f64>,
    pub wiggle_radius: Option<usize>,
    pub use_strip: Option<bool>,
}

/// Partial update of the session options; absent fields keep their value.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
pub struct OptionsPatch {
    #[serde(rename = "w_G", alias = "w_g")]
    pub w_g: Option<f64>,
    #[serde(rename = "w_L", alias = "w_l")]
    pub w_l: Option<f64>,
    #[serde(rename = "w_D", alias = "w_d")]
    pub w_d: Option<f64>,
    #[serde(rename = "w_S", alias = "w_s")]
    pub w_s: Option<f64>,
    pub cooling: Option<bool>,
    pub freeze_after: Option<u64>,
    pub heating: Option<bool>,
    pub heat_period: Option<u64>,
    pub safety_factor: Option<f64>,
    pub brush_sizes: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub arc_window_frac: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Load {
        path: String,
    },
    SelectSlice {
        index: usize,
    },
    Seed {
        x: i32,
        y: i32,
    },
    Cursor {
        x: i32,
        y: i32,
    },
    Commit {},
    Close {},
    Heat {},
    Cancel {},
    Paint {
        points: Vec<Pixel>,
        brush: usize,
    },
    ClearPaint {},
    Train {},
    ViewCosts {},
    CutBegin {
        x: f64,
        y: f64,
    },
    CutEnd {
        x: f64,
        y: f64,
    },
    SegmentCut {
        cut_id: usize,
        action: CutAction,
        x: Option<i32>,
        y: Option<i32>,
    },
    Segment3d {
        segments: Vec<SegmentRequest>,
        #[serde(default)]
        options: Segment3dOptions,
    },
    SetOptions(OptionsPatch),
    GetMesh {
        samples: Option<usize>,
    },
}

impl ClientMessage {
    /// Scope of a cursor message for coalescing: `Some(None)` for the slice
    /// wire, `Some(Some(id))` for a cut wire, `None` for anything else.
    pub fn cursor_scope(&self) -> Option<Option<usize>> {
        match self {
            ClientMessage::Cursor { .. } => Some(None),
            ClientMessage::SegmentCut {
                cut_id,
                action: CutAction::Cursor,
                ..
            } => Some(Some(*cut_id)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerEvent {
    Ack {
        seq: u64,
    },
    Volume {
        seq: u64,
        width: usize,
        height: usize,
        depth: usize,
    },
    Slice {
        seq: u64,
        index: usize,
        width: usize,
        height: usize,
        data: String,
    },
    Wire {
        seq: u64,
        points: Vec<Pixel>,
        #[serde(skip_serializing_if = "Option::is_none")]
        cut_id: Option<usize>,
    },
    AutoSeed {
        seq: u64,
        x: i32,
        y: i32,
        #[serde(skip_serializing_if = "Option::is_none")]
        cut_id: Option<usize>,
    },
    SegmentCommitted {
        seq: u64,
        points: Vec<Pixel>,
        #[serde(skip_serializing_if = "Option::is_none")]
        cut_id: Option<usize>,
    },
    BoundaryClosed {
        seq: u64,
        points: Vec<Pixel>,
        #[serde(skip_serializing_if = "Option::is_none")]
        cut_id: Option<usize>,
    },
    Costs {
        seq: u64,
        width: usize,
        height: usize,
        data: String,
    },
    CutImage {
        seq: u64,
        cut_id: usize,
        width: usize,
        height: usize,
        data: String,
    },
    Progress {
        seq: u64,
        slice: usize,
        done: usize,
        total: usize,
    },
    Contours {
        seq: u64,
        #[serde(flatten)]
        contours: ContourSet,
    },
    Mesh {
        seq: u64,
        obj_text: String,
    },
    Error {
        seq: Option<u64>,
        code: String,
        message: String,
    },
}

impl ServerEvent {
    pub fn error(seq: Option<u64>, code: impl Into<String>, message: impl Into<String>) -> Self {
        ServerEvent::Error {
            seq,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn from_core_error(seq: Option<u64>, e: &Error) -> Self {
        Self::error(seq, core_error_code(e), e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

pub fn engine_error_code(code: ErrorCode) -> String {
    serde_json::to_value(code)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "engine".into())
}

pub fn core_error_code(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::ImageTooSmall { .. } => "image_too_small",
        Error::IndexOutOfRange { .. } => "index_out_of_range",
        Error::PixelOutside { .. } | Error::PointOutOfBounds { .. } => "out_of_bounds",
        Error::TooFewSamples { .. } => "too_few_samples",
        Error::ZeroGradientSample => "zero_gradient_sample",
        Error::NotFinalized(_) => "unreachable",
        Error::EngineState(_) => "engine_state",
        Error::SessionClosed => "session_closed",
        Error::CutOrdering { .. } => "cut_ordering",
        Error::Topology { .. } => "topology",
        Error::UnreachableSeed { .. } => "unreachable_seed",
        Error::Correspondence { .. } => "correspondence",
        Error::DegenerateContour(_) => "degenerate_contour",
        Error::NonConvergence(_) => "non_convergence",
        Error::Cancelled => "cancelled",
    }
}

/// Base64 of the binary PGM encoding of `img`.
pub fn image_payload(img: &Image) -> String {
    base64::engine::general_purpose::STANDARD.encode(encode_pgm(img))
}

/// A decoded client message with its sequence number and optional replay
/// timestamp.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub seq: u64,
    pub time_ms: Option<u64>,
    pub message: ClientMessage,
}

/// Decodes one client text frame. On failure returns the error event to
/// send back, echoing `seq` when it could be read.
pub fn parse_envelope(text: &str) -> Result<Envelope, ServerEvent> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ServerEvent::error(None, "bad_message", format!("malformed JSON: {e}")))?;
    let seq = value.get("seq").and_then(serde_json::Value::as_u64);
    let Some(seq) = seq else {
        return Err(ServerEvent::error(
            None,
            "bad_message",
            "missing or invalid `seq`",
        ));
    };
    let time_ms = value.get("t").and_then(serde_json::Value::as_u64);
    let message = serde_json::from_value(value)
        .map_err(|e| ServerEvent::error(Some(seq), "bad_message", e.to_string()))?;
    Ok(Envelope {
        seq,
        time_ms,
        message,
    })
}

/// Drops every cursor message that is directly followed by another cursor
/// message of the same scope; the survivor answers for the run.
pub fn coalesce_cursors(
    batch: Vec<Result<Envelope, ServerEvent>>,
) -> Vec<Result<Envelope, ServerEvent>> {
    let mut out: Vec<Result<Envelope, ServerEvent>> = Vec::with_capacity(batch.len());
    for item in batch {
        if let Ok(env) = &item {
            if let Some(scope) = env.message.cursor_scope() {
                if let Some(Ok(prev)) = out.last() {
                    if prev.message.cursor_scope() == Some(scope) {
                        out.pop();
                    }
                }
            }
        }
        out.push(item);
    }
    out
}
