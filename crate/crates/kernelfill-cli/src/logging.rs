//! Stderr logging gated by the `KERNELFILL_LOG` environment variable
//! (`error`, `warn`, `info` or `debug`; default `warn`).

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Error = 0,
    Warn = 1,
    Info = 2,
    Debug = 3,
}

fn configured() -> Level {
    static LEVEL: OnceLock<Level> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("KERNELFILL_LOG").as_deref() {
        Ok("error") => Level::Error,
        Ok("warn") => Level::Warn,
        Ok("info") => Level::Info,
        Ok("debug") => Level::Debug,
        Ok(other) => {
            eprintln!("kernelfill: ignoring unknown KERNELFILL_LOG value {other:?}");
            Level::Warn
        }
        Err(_) => Level::Warn,
    })
}

pub fn log(level: Level, message: &str) {
    if level <= configured() {
        let tag = match level {
            Level::Error => "error",
            Level::Warn => "warn",
            Level::Info => "info",
            Level::Debug => "debug",
        };
        eprintln!("kernelfill [{tag}] {message}");
    }
}

pub fn warn(message: &str) {
    log(Level::Warn, message);
}

pub fn info(message: &str) {
    log(Level::Info, message);
}

pub fn debug(message: &str) {
    log(Level::Debug, message);
}
