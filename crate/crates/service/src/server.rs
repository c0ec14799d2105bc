//! Network front ends: the session protocol over TCP and scene documents
//! over HTTP.

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};

use skelforge_core::scene::Scene;

use crate::protocol::Session;
use crate::store::{valid_scene_id, SceneStore, StoreError};

/// Accepts connections forever, one session per connection.
pub async fn serve_sessions(listener: TcpListener, store: SceneStore) -> std::io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        let store = store.clone();
        tokio::spawn(async move {
            log::info!("session {peer} opened");
            match run_session(stream, store).await {
                Ok(()) => log::info!("session {peer} closed"),
                Err(e) => log::warn!("session {peer} dropped: {e}"),
            }
        });
    }
}

/// Reads requests line by line and answers each before reading the next.
pub async fn run_session(stream: TcpStream, store: SceneStore) -> std::io::Result<()> {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();
    let mut session = Session::new(store);
    while let Some(line) = lines.next_line().await? {
        if line.trim().is_empty() {
            continue;
        }
        let reply = session.handle_line(&line);
        let mut out = serde_json::to_vec(&reply).expect("replies always serialize");
        out.push(b'\n');
        write.write_all(&out).await?;
    }
    Ok(())
}

pub fn http_router(store: SceneStore) -> Router {
    Router::new().route("/scenes/{id}", get(get_scene).put(put_scene)).with_state(store)
}

pub async fn serve_http(listener: TcpListener, store: SceneStore) -> std::io::Result<()> {
    axum::serve(listener, http_router(store)).await
}

fn error_response(e: StoreError) -> Response {
    let status = match e {
        StoreError::InvalidSceneId(_) => StatusCode::BAD_REQUEST,
        StoreError::NotFound(_) => StatusCode::NOT_FOUND,
        StoreError::Scene(_) => StatusCode::UNPROCESSABLE_ENTITY,
        StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    let body = serde_json::json!({ "code": e.code(), "message": e.to_string() });
    (status, [(header::CONTENT_TYPE, "application/json")], body.to_string()).into_response()
}

async fn get_scene(State(store): State<SceneStore>, Path(id): Path<String>) -> Response {
    match store.read(&id) {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => error_response(e),
    }
}

/// Stores the canonical re-serialization of a valid document.
async fn put_scene(State(store): State<SceneStore>, Path(id): Path<String>, body: Bytes) -> Response {
    if !valid_scene_id(&id) {
        return error_response(StoreError::InvalidSceneId(id));
    }
    let result = Scene::load(&body).map_err(StoreError::from).and_then(|scene| store.save(&id, &scene));
    match result {
        Ok(()) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => error_response(e),
    }
}
