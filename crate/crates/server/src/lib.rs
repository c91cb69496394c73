//! HTTP service for essencery: a file-backed graph store with revision-checked
//! saves, SVG and kernel endpoints, and static hosting for the editor UI.

pub mod api;
pub mod store;

use std::io;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use essencery_core::kernel::{load_configured_kernel, KernelError};
use thiserror::Error;
use tokio::net::TcpListener;

pub use api::{router, AppState};
pub use store::{GraphSummary, Store, StoreError};

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub data_dir: PathBuf,
    pub port: u16,
    /// Falls back to `ESSENCERY_KERNEL`, then the standard kernel.
    pub kernel_path: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
    pub host: Ipv4Addr,
}

impl ServeConfig {
    pub fn new(data_dir: impl Into<PathBuf>, port: u16) -> Self {
        ServeConfig {
            data_dir: data_dir.into(),
            port,
            kernel_path: None,
            ui_dir: None,
            host: Ipv4Addr::LOCALHOST,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("kernel: {0}")]
    Kernel(#[from] KernelError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A bound but not yet running server.
pub struct Server {
    listener: TcpListener,
    app: axum::Router,
}

impl Server {
    /// Opens the store, loads the kernel and binds the port. Any failure here
    /// aborts startup.
    pub async fn bind(config: &ServeConfig) -> Result<Server, ServeError> {
        let store = Store::open(&config.data_dir)?;
        let index = store.index()?;
        log::info!(
            "{} graph(s) in {}, {} unreadable",
            index.graphs.len(),
            config.data_dir.display(),
            index.warnings.len()
        );
        let kernel = load_configured_kernel(config.kernel_path.as_deref())?;
        let addr = SocketAddr::from((config.host, config.port));
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| ServeError::Bind { addr, source })?;
        let app = router(AppState::new(store, kernel), config.ui_dir.clone());
        Ok(Server { listener, app })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub async fn run(self) -> io::Result<()> {
        log::info!("listening on http://{}", self.listener.local_addr()?);
        axum::serve(self.listener, self.app).await
    }
}

pub async fn serve(config: ServeConfig) -> Result<(), ServeError> {
    Server::bind(&config).await?.run().await?;
    Ok(())
}
