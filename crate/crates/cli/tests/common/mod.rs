#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use futures_util::{SinkExt, StreamExt};
use poise_cli::server;
use poise_core::landmark::serialize_frame;
use poise_core::synth::SyntheticSession;
use poise_core::{ConfidenceReport, EngineConfig, LandmarkFrame, Outbound, Preset};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

pub fn frames(preset: Preset, seed: u64, n: usize) -> Vec<LandmarkFrame> {
    SyntheticSession::new(preset, 30.0, seed).take(n).collect()
}

pub async fn start_server(cfg: EngineConfig) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(server::serve(listener, Arc::new(cfg)));
    addr
}

/// Sends every line as its own text message, then `end`, and collects all
/// replies until the server closes the connection.
pub async fn exchange(addr: SocketAddr, lines: &[String]) -> Vec<Outbound> {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}"))
        .await
        .unwrap();
    let (mut sink, mut source) = ws.split();
    let reader = tokio::spawn(async move {
        let mut out = Vec::new();
        while let Some(Ok(msg)) = source.next().await {
            if let Message::Text(t) = msg {
                out.push(Outbound::parse(&t).unwrap());
            }
        }
        out
    });
    for line in lines {
        sink.send(Message::text(line.clone())).await.unwrap();
    }
    sink.send(Message::text(r#"{"type":"end"}"#)).await.unwrap();
    reader.await.unwrap()
}

pub fn lines(frames: &[LandmarkFrame]) -> Vec<String> {
    frames.iter().map(serialize_frame).collect()
}

pub fn reports(msgs: &[Outbound]) -> Vec<ConfidenceReport> {
    msgs.iter()
        .filter_map(|m| match m {
            Outbound::Report { report, .. } => Some(report.clone()),
            _ => None,
        })
        .collect()
}

/// Reports a fresh in-process session emits for `frames`.
pub fn reference(frames: &[LandmarkFrame], cfg: &EngineConfig) -> Vec<ConfidenceReport> {
    let mut s = poise_core::Session::new(cfg.clone());
    frames
        .iter()
        .filter_map(|f| s.process(f.clone()).unwrap().report())
        .collect()
}
