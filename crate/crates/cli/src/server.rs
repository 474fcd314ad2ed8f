//! WebSocket transport: one connection owns one [`Session`] running on its
//! own thread, fed in arrival order.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc as tmpsc;

use crate::protocol::{parse_envelope, ServerEvent, MAX_MESSAGE_BYTES};
use crate::session::{run_session, Inbound, Session};

/// Close code sent when a client message exceeds the size limit.
pub const PROTOCOL_ERROR: u16 = 1002;

/// Frames beyond this size are rejected by the transport itself.
const TRANSPORT_LIMIT: usize = 16 * MAX_MESSAGE_BYTES;

enum Outbound {
    Event(ServerEvent),
    Close(u16, String),
}

pub fn router() -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/", get(upgrade))
}

/// Serves connections from `listener` until the task is dropped.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

async fn upgrade(ws: WebSocketUpgrade) -> Response {
    ws.max_message_size(TRANSPORT_LIMIT)
        .max_frame_size(TRANSPORT_LIMIT)
        .on_upgrade(connection)
}

async fn connection(socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = tmpsc::unbounded_channel::<Outbound>();
    let (in_tx, in_rx) = mpsc::channel::<Inbound>();
    let cancel = Arc::new(AtomicBool::new(false));

    let session = Session::new(cancel.clone());
    let events = out_tx.clone();
    std::thread::spawn(move || {
        run_session(session, in_rx, move |ev| {
            let _ = events.send(Outbound::Event(ev));
        })
    });

    let writer = tokio::spawn(async move {
        while let Some(item) = out_rx.recv().await {
            match item {
                Outbound::Event(ev) => {
                    if sink.send(Message::Text(ev.to_json().into())).await.is_err() {
                        return;
                    }
                }
                Outbound::Close(code, reason) => {
                    let frame = CloseFrame {
                        code,
                        reason: reason.into(),
                    };
                    let _ = sink.send(Message::Close(Some(frame))).await;
                    return;
                }
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let len = match &msg {
            Message::Text(t) => t.len(),
            Message::Binary(b) => b.len(),
            _ => 0,
        };
        if len > MAX_MESSAGE_BYTES {
            let _ = out_tx.send(Outbound::Close(
                PROTOCOL_ERROR,
                format!("message of {len} bytes exceeds the {MAX_MESSAGE_BYTES} byte limit"),
            ));
            break;
        }
        let item = match msg {
            Message::Text(t) => parse_envelope(t.as_str()),
            Message::Binary(_) => Err(ServerEvent::error(
                None,
                "bad_message",
                "binary frames are not supported",
            )),
            Message::Close(_) => break,
            _ => continue,
        };
        if in_tx.send(item).is_err() {
            break;
        }
    }

    // Stops a running 3D job; the session thread exits once its channel
    // closes, which in turn ends the writer.
    cancel.store(true, Ordering::SeqCst);
    drop(in_tx);
    drop(out_tx);
    let _ = writer.await;
}
