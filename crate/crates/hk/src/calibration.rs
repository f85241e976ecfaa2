//! Calibrated constants for checks whose asymptotic statements leave the
//! constant factor open. Shipped values live in `calibration.toml` next to
//! the crate manifest and can be overridden per run from a file.

use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::Result;

#[derive(Debug, Clone, Deserialize)]
pub struct Calibration {
    pub version: u32,
    pub movefar_c: f64,
    pub gooddir_c0: f64,
}

const EMBEDDED: &str = include_str!("../calibration.toml");

static DEFAULT: OnceLock<Calibration> = OnceLock::new();

/// The shipped calibration.
pub fn get() -> &'static Calibration {
    DEFAULT.get_or_init(|| toml::from_str(EMBEDDED).expect("embedded calibration parses"))
}

/// Load an override from a file.
pub fn load(path: &Path) -> Result<Calibration> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| {
        std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()).into()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_calibration_parses() {
        let c = get();
        assert_eq!(c.version, 1);
        assert!(c.movefar_c > 0.0);
        assert!(c.gooddir_c0 > 0.0);
    }
}
