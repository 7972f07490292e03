//! Structured JSON-line logging to standard error, with a plain human
//! summary at the end of a run.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LogLevel {
    Off,
    Error,
    Info,
    Debug,
}

impl FromStr for LogLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "off" => Ok(LogLevel::Off),
            "error" => Ok(LogLevel::Error),
            "info" => Ok(LogLevel::Info),
            "debug" => Ok(LogLevel::Debug),
            other => Err(format!(
                "unknown log level {other:?} (off|error|info|debug)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Logger {
    level: LogLevel,
}

impl Logger {
    pub fn new(level: LogLevel) -> Logger {
        Logger { level }
    }

    fn emit(&self, level: LogLevel, tag: &str, message: &str, context: serde_json::Value) {
        if level > self.level {
            return;
        }
        let record = serde_json::json!({
            "level": tag,
            "message": message,
            "context": context,
        });
        eprintln!("{record}");
    }

    pub fn error(&self, message: &str, context: serde_json::Value) {
        self.emit(LogLevel::Error, "error", message, context);
    }

    pub fn info(&self, message: &str, context: serde_json::Value) {
        self.emit(LogLevel::Info, "info", message, context);
    }

    pub fn debug(&self, message: &str, context: serde_json::Value) {
        self.emit(LogLevel::Debug, "debug", message, context);
    }

    /// Human summary line, always printed unless logging is off.
    pub fn summary(&self, text: &str) {
        if self.level > LogLevel::Off {
            eprintln!("{text}");
        }
    }
}
