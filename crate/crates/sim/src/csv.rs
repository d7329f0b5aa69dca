//! CSV emission with reproducibility metadata. Output from identical
//! configurations is byte-identical, so wall-clock timing never goes in
//! the file.

use std::fmt::Write;

/// Floats are printed with nine significant digits.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    format!("{x:.8e}")
}

/// FNV-1a over the canonical config text; stable across platforms and
/// versions so reruns can be matched to their configuration.
pub fn config_hash(canonical: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Simple row-oriented CSV builder: `#`-prefixed metadata lines, one
/// header row, one row per sweep point.
pub struct CsvTable {
    buf: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(experiment: &str, seed: u64, canonical_config: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# modem {} experiment={experiment}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(buf, "# seed={seed}");
        let _ = writeln!(buf, "# config_hash={:016x}", config_hash(canonical_config));
        CsvTable { buf, columns: 0 }
    }

    pub fn comment(&mut self, text: &str) {
        let _ = writeln!(self.buf, "# {text}");
    }

    pub fn header(&mut self, names: &[&str]) {
        self.columns = names.len();
        let _ = writeln!(self.buf, "{}", names.join(","));
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width mismatch");
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Wilson 95% confidence interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (((center - half) / denom).max(0.0), ((center + half) / denom).min(1.0))
}
