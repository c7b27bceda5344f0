use std::io::Write;
use std::sync::Arc;

use foresight_gateway::Gateway;
use foresight_session::{router, SessionService, SessionStore};

use crate::config::CliConfig;
use crate::ServeArgs;

pub async fn run(args: ServeArgs) -> Result<u8, String> {
    let cfg = CliConfig::load(&args.config)?.with_backend_kind(args.backend.map(Into::into));
    let templates = cfg.templates()?;
    let gw = Gateway::from_config(cfg.backend.clone()).map_err(|e| e.to_string())?;
    let store = match &args.data {
        Some(dir) => SessionStore::open(dir).map_err(|e| e.to_string())?,
        None => SessionStore::in_memory(),
    };
    let service = SessionService::new(store, Arc::new(gw))
        .with_templates(templates)
        .with_settings(cfg.session)
        .with_use_cases(cfg.use_cases());
    let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
        .await
        .map_err(|e| format!("cannot bind {}:{}: {e}", args.host, args.port))?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    println!("listening on http://{addr}");
    let _ = std::io::stdout().flush();
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())?;
    Ok(0)
}
