//! Resource caps. Every potentially explosive enumeration checks one of
//! these and fails with [`Error::Resource`](crate::error::Error) instead
//! of running away. Each cap can be overridden by an environment variable
//! `QLAT_CAP_*`; the CLI reads them once at startup.

#[derive(Debug, Clone)]
pub struct Caps {
    /// Maximum number of short vectors a single enumeration may emit.
    pub short_vectors: u64,
    /// Maximum number of genus classes discovered before giving up.
    pub classes: u64,
    /// Maximum value of p^(e*n*m) for brute-force counting mod p^e.
    pub mod_pe: u64,
    /// Maximum number of search-tree nodes in local representability tests.
    pub local_nodes: u64,
    /// Default grid budget for the k-generation minor scan.
    pub kgen_grid: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            short_vectors: 4_000_000,
            classes: 256,
            mod_pe: 200_000_000,
            local_nodes: 20_000_000,
            kgen_grid: 200_000,
        }
    }
}

impl Caps {
    /// Default caps with `QLAT_CAP_*` environment overrides applied.
    pub fn from_env() -> Self {
        let mut caps = Caps::default();
        let read = |name: &str| -> Option<u64> {
            std::env::var(name).ok().and_then(|v| v.parse().ok())
        };
        if let Some(v) = read("QLAT_CAP_SHORTVEC") {
            caps.short_vectors = v;
        }
        if let Some(v) = read("QLAT_CAP_CLASSES") {
            caps.classes = v;
        }
        if let Some(v) = read("QLAT_CAP_MODP") {
            caps.mod_pe = v;
        }
        if let Some(v) = read("QLAT_CAP_NODES") {
            caps.local_nodes = v;
        }
        if let Some(v) = read("QLAT_CAP_KGEN") {
            caps.kgen_grid = v;
        }
        caps
    }
}
