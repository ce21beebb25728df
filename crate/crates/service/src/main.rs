use clap::Parser;
use empnet_service::{router, AppState, Config};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"))).init();
    let config = Config::parse();
    let addr = std::net::SocketAddr::new(config.bind, config.port);
    let state = match AppState::new(config) {
        Ok(s) => s,
        Err(e) => {
            tracing::error!("cannot open storage: {e}");
            std::process::exit(3);
        }
    };
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            tracing::error!("cannot bind {addr}: {e}");
            std::process::exit(3);
        }
    };
    tracing::info!("listening on {addr}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await {
        tracing::error!("server error: {e}");
        std::process::exit(3);
    }
}
