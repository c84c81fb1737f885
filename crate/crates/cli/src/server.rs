//! Live scoring over WebSocket text messages.
//!
//! Each connection is one session. A reader task queues inbound lines for a
//! single worker that scores them strictly in order and replies in-band;
//! nothing is dropped when the client outpaces the engine, the backlog shows
//! up as `queue_depth` on the reports instead.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use futures_util::{SinkExt, StreamExt};
use poise_core::landmark::{parse_record, SessionHeader, SessionWriter};
use poise_core::{EngineConfig, Error, Outbound, Record, Session, Step, Timing};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;

/// Accepts `host:port` or a `ws://host:port[/path]` URL.
pub fn parse_endpoint(endpoint: &str) -> String {
    let rest = endpoint.strip_prefix("ws://").unwrap_or(endpoint);
    rest.split('/').next().unwrap_or(rest).to_string()
}

pub async fn bind(endpoint: &str) -> std::io::Result<TcpListener> {
    TcpListener::bind(parse_endpoint(endpoint)).await
}

/// Serves sessions until the listener fails.
pub async fn serve(listener: TcpListener, cfg: Arc<EngineConfig>) -> std::io::Result<()> {
    loop {
        let (stream, _) = listener.accept().await?;
        let cfg = cfg.clone();
        tokio::spawn(async move {
            if let Err(e) = handle_connection(stream, cfg, None).await {
                eprintln!("connection closed with error: {e}");
            }
        });
    }
}

/// Creates the session file up front so an unwritable path fails before any
/// client connects.
pub fn create_recording(path: &Path) -> poise_core::Result<SessionWriter<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let header = SessionHeader::new("poise-record", now_rfc3339());
    SessionWriter::new(BufWriter::new(file), &header).map_err(|e| io_error(path, e))
}

/// Serves exactly one session and records its accepted frames to `path`.
pub async fn record(
    listener: TcpListener,
    cfg: Arc<EngineConfig>,
    path: PathBuf,
) -> anyhow::Result<()> {
    let writer = create_recording(&path)?;
    let (stream, _) = listener.accept().await?;
    handle_connection(stream, cfg, Some(Recording { writer, path })).await
}

struct Recording {
    writer: SessionWriter<BufWriter<File>>,
    path: PathBuf,
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

async fn handle_connection(
    stream: TcpStream,
    cfg: Arc<EngineConfig>,
    mut recording: Option<Recording>,
) -> anyhow::Result<()> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut sink, mut source) = ws.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let depth = Arc::new(AtomicUsize::new(0));

    let reader_depth = depth.clone();
    let reader = tokio::spawn(async move {
        while let Some(msg) = source.next().await {
            let text = match msg {
                Ok(Message::Text(t)) => t,
                Ok(Message::Binary(b)) => match String::from_utf8(b.to_vec()) {
                    Ok(s) => s.into(),
                    Err(_) => continue,
                },
                Ok(Message::Close(_)) | Err(_) => break,
                Ok(_) => continue,
            };
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                reader_depth.fetch_add(1, Ordering::SeqCst);
                if tx.send(line.to_string()).is_err() {
                    return;
                }
            }
        }
    });

    let mut session = Session::new((*cfg).clone());
    while let Some(line) = rx.recv().await {
        let queue_depth = depth.fetch_sub(1, Ordering::SeqCst) - 1;
        let start = Instant::now();
        let outcome = parse_record(&line).and_then(|record| match record {
            Record::End => Ok(None),
            Record::Frame(frame) => {
                let step = session.process(frame)?;
                Ok(Some(step))
            }
        });
        let reply = match outcome {
            Ok(None) => {
                let msg = match session.summary() {
                    Ok(summary) => Outbound::Summary(summary),
                    Err(e) => Outbound::error(&e),
                };
                sink.send(Message::text(msg.to_line())).await?;
                sink.close().await.ok();
                break;
            }
            Ok(Some(step)) => {
                if let Some(rec) = recording.as_mut() {
                    rec.writer
                        .write_frame_raw(line.trim())
                        .map_err(|e| io_error(&rec.path, e))?;
                }
                match step {
                    Step::Report(report) => {
                        let timing = Timing {
                            processing_us: start.elapsed().as_micros() as u64,
                            queue_depth,
                        };
                        Some(Outbound::report(report, Some(timing)))
                    }
                    Step::Calibrating { .. } | Step::Scored => None,
                }
            }
            Err(e) => Some(Outbound::error(&e)),
        };
        if let Some(msg) = reply {
            sink.send(Message::text(msg.to_line())).await?;
        }
    }
    reader.abort();
    if let Some(mut rec) = recording {
        rec.writer.flush().map_err(|e| io_error(&rec.path, e))?;
    }
    Ok(())
}
