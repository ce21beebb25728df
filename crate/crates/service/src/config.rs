use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;

use clap::Parser;
use empnet_core::Thresholds;

/// Service settings, from flags or `EMPNET_*` environment variables.
#[derive(Clone, Debug, Parser)]
#[command(name = "empnet-service", version)]
pub struct Config {
    #[arg(long, env = "EMPNET_BIND", default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub bind: IpAddr,
    #[arg(long, env = "EMPNET_PORT", default_value_t = 8080)]
    pub port: u16,
    /// One subdirectory per session.
    #[arg(long, env = "EMPNET_STORAGE", default_value = "sessions")]
    pub storage: PathBuf,
    /// Concurrent background jobs.
    #[arg(long, env = "EMPNET_WORKERS", default_value_t = 2)]
    pub workers: usize,
    /// When set, every request needs `Authorization: Bearer <token>`.
    #[arg(long, env = "EMPNET_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    #[arg(long, env = "EMPNET_EPS_PRIME", default_value_t = 0.01)]
    pub eps_prime: f64,
    #[arg(long, env = "EMPNET_DELTA", default_value_t = 0.015)]
    pub delta: f64,
    #[arg(long, env = "EMPNET_RHO0", default_value_t = 0.9)]
    pub rho0: f64,
    #[arg(long, env = "EMPNET_BIG_M")]
    pub big_m: Option<f64>,
}

impl Config {
    /// Defaults with storage under `root`, for embedding and tests.
    pub fn with_storage(root: impl Into<PathBuf>) -> Self {
        let mut c = Self::parse_from(["empnet-service"]);
        c.storage = root.into();
        c
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds { eps_prime: self.eps_prime, delta: self.delta, rho0: self.rho0, big_m: self.big_m, ..Thresholds::default() }
    }
}
