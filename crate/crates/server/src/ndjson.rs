//! Line-delimited session protocol over byte streams. Each connection owns
//! one session; the connection ends on `close` or EOF.

use std::future::Future;
use std::sync::Arc;

use gridsafe_core::protocol::{FrameError, Session};
use parking_lot::Mutex;
use tokio::io::{AsyncBufReadExt, AsyncRead, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::net::TcpListener;

use crate::AppState;

/// Runs one session over a reader/writer pair until close or EOF.
pub async fn serve_ndjson_stream<R, W>(reader: R, mut writer: W, state: Arc<AppState>) -> std::io::Result<()>
where
    R: AsyncRead + Unpin,
    W: AsyncWrite + Unpin,
{
    let st = state.clone();
    let env = tokio::task::spawn_blocking(move || st.new_env(None))
        .await
        .map_err(std::io::Error::other)?;
    let session = match env {
        Ok(env) => Arc::new(Mutex::new(Session::new(env))),
        Err(e) => {
            let frame = FrameError::new(e.kind(), e.to_string()).to_json();
            writer.write_all(format!("{frame}\n").as_bytes()).await?;
            return writer.flush().await;
        }
    };
    let mut lines = BufReader::new(reader).lines();
    while let Some(line) = lines.next_line().await? {
        if line.trim().is_empty() {
            continue;
        }
        let s = session.clone();
        let reply = tokio::task::spawn_blocking(move || {
            let mut s = s.lock();
            let reply = s.handle_line(&line);
            (reply, s.is_closed())
        })
        .await
        .map_err(std::io::Error::other)?;
        writer.write_all(format!("{}\n", reply.0).as_bytes()).await?;
        writer.flush().await?;
        if reply.1 {
            break;
        }
    }
    Ok(())
}

/// Accepts protocol connections until `shutdown` resolves.
pub async fn serve_ndjson(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr()?, "session protocol listening");
    tokio::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => return Ok(()),
            accepted = listener.accept() => {
                let (stream, peer) = accepted?;
                let state = state.clone();
                tokio::spawn(async move {
                    let (r, w) = stream.into_split();
                    if let Err(e) = serve_ndjson_stream(r, w, state).await {
                        tracing::warn!(%peer, error = %e, "protocol connection failed");
                    }
                });
            }
        }
    }
}
