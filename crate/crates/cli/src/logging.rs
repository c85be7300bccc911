//! Minimal stderr logger gated by `MOUND_LOG` (error|warn|info|debug)
//! or the `--log` flag. Data never goes to stderr; logs never go to
//! stdout.

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Error,
    Warn,
    Info,
    Debug,
}

impl Level {
    pub fn parse(s: &str) -> Option<Level> {
        match s.to_ascii_lowercase().as_str() {
            "error" => Some(Level::Error),
            "warn" => Some(Level::Warn),
            "info" => Some(Level::Info),
            "debug" => Some(Level::Debug),
            _ => None,
        }
    }
}

static LEVEL: OnceLock<Level> = OnceLock::new();

/// Install the level once: flag wins over MOUND_LOG, default warn.
pub fn init(flag: Option<&str>) {
    let level = flag
        .and_then(Level::parse)
        .or_else(|| std::env::var("MOUND_LOG").ok().as_deref().and_then(Level::parse))
        .unwrap_or(Level::Warn);
    let _ = LEVEL.set(level);
}

pub fn enabled(level: Level) -> bool {
    level <= *LEVEL.get_or_init(|| Level::Warn)
}

macro_rules! log_at {
    ($name:ident, $level:expr) => {
        #[allow(dead_code)]
        pub fn $name(message: impl AsRef<str>) {
            if enabled($level) {
                eprintln!("[{}] {}", stringify!($name), message.as_ref());
            }
        }
    };
}

log_at!(error, Level::Error);
log_at!(warn, Level::Warn);
log_at!(info, Level::Info);
log_at!(debug, Level::Debug);
