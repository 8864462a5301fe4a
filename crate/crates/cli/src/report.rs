//! Output files: the key-value results record, the plain-text report and
//! the per-period figure data.

use std::fmt::Write as _;
use std::path::Path;

use storage_core::{DiagnosticsReport, EstimationReport};

use crate::error::{CliError, CliResult};

/// Marker written for values that could not be computed.
pub const MISSING: &str = "NA";

/// Ordered `key = value` pairs. Floats use Rust's shortest round-trip
/// formatting, so parsing a value back yields the identical `f64`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvRecord {
    entries: Vec<(String, String)>,
}

impl KvRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn float(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn opt(&mut self, key: impl Into<String>, value: Option<f64>) -> &mut Self {
        self.text(key, value.map_or_else(|| MISSING.to_string(), |v| v.to_string()))
    }

    pub fn int(&mut self, key: impl Into<String>, value: usize) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn append(&mut self, other: &KvRecord) -> &mut Self {
        self.entries.extend(other.entries.iter().cloned());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `None` for absent keys and for the missing marker.
    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).filter(|v| *v != MISSING).and_then(|v| v.parse().ok())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut record = Self::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| CliError::Data {
                path: "results".into(),
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            record.text(k, v);
        }
        Ok(record)
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

/// `date,value` rows, one per date; periods without a value get the
/// missing marker so the row count always matches the input.
pub fn series_csv(dates: &[String], values: &[f64]) -> String {
    let mut out = String::from("date,value\n");
    for (i, d) in dates.iter().enumerate() {
        match values.get(i) {
            Some(v) => {
                let _ = writeln!(out, "{d},{v}");
            }
            None => {
                let _ = writeln!(out, "{d},{MISSING}");
            }
        }
    }
    out
}

pub const PARAM_NAMES: [&str; 4] = ["rho", "a", "b", "delta"];

pub fn diagnostics_record(diag: Option<&DiagnosticsReport>) -> KvRecord {
    let mut kv = KvRecord::new();
    match diag {
        Some(d) => {
            kv.int("diag.n", d.n)
                .float("diag.mean", d.mean)
                .float("diag.sd", d.sd)
                .opt("diag.skewness", d.skewness)
                .opt("diag.excess_kurtosis", d.excess_kurtosis)
                .opt("diag.ac1", d.ac1)
                .opt("diag.jarque_bera_p", d.jarque_bera_p)
                .opt("diag.ks_p", d.kolmogorov_smirnov_p)
                .opt("diag.ljung_box_p", d.ljung_box_p)
                .opt("diag.arch_p", d.arch_p)
                .flag("diag.degenerate", d.degenerate);
        }
        None => {
            for key in [
                "diag.n",
                "diag.mean",
                "diag.sd",
                "diag.skewness",
                "diag.excess_kurtosis",
                "diag.ac1",
                "diag.jarque_bera_p",
                "diag.ks_p",
                "diag.ljung_box_p",
                "diag.arch_p",
                "diag.degenerate",
            ] {
                kv.text(key, MISSING);
            }
        }
    }
    kv
}

pub fn estimation_record(report: &EstimationReport) -> KvRecord {
    let mut kv = KvRecord::new();
    let t = &report.theta_hat;
    kv.text("method", report.method.name());
    for (name, v) in PARAM_NAMES.iter().zip(t.theta()) {
        kv.float(*name, v);
    }
    kv.float("r", t.r)
        .float("loglik", report.loglik)
        .int("evaluations", report.evaluations)
        .int("iterations", report.iterations)
        .float("diameter", report.diameter)
        .flag("converged", report.converged)
        .flag("failed", report.failed);
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        kv.opt(format!("se.{name}"), report.bootstrap_se.and_then(|se| se[k]));
    }
    for (k, name) in PARAM_NAMES.iter().chain(["loglik"].iter()).enumerate() {
        kv.opt(format!("mc_std.{name}"), report.mc_std.map(|m| m[k]));
    }
    match &report.filter {
        Some(f) => {
            kv.float("filter.loglik", f.loglik)
                .flag("filter.degenerate", f.degenerate)
                .int("filter.clamped_components", f.clamped_components);
        }
        None => {
            kv.text("filter.loglik", MISSING).text("filter.degenerate", MISSING).text("filter.clamped_components", MISSING);
        }
    }
    kv.append(&diagnostics_record(report.diagnostics.as_ref()));
    kv
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.4}"))
}

pub fn estimation_table(report: &EstimationReport, normalization_factor: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Storage model, {} estimates", report.method.name().to_uppercase());
    let _ = writeln!(out, "prices normalized by {normalization_factor:.6}");
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<10}{:>12}{:>12}{:>12}", "", "estimate", "boot s.e.", "MC s.d.");
    for (k, (name, v)) in PARAM_NAMES.iter().zip(report.theta_hat.theta()).enumerate() {
        let _ = writeln!(
            out,
            "{:<10}{:>12.4}{:>12}{:>12}",
            name,
            v,
            fmt_opt(report.bootstrap_se.and_then(|se| se[k])),
            fmt_opt(report.mc_std.map(|m| m[k]))
        );
    }
    let _ = writeln!(out, "{:<10}{:>12.2}{:>12}{:>12}", "loglik", report.loglik, "", fmt_opt(report.mc_std.map(|m| m[4])));
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "evaluations {}  iterations {}  diameter {:.2e}  converged {}  failed {}",
        report.evaluations, report.iterations, report.diameter, report.converged, report.failed
    );
    let _ = writeln!(out);
    out.push_str(&diagnostics_table(report.diagnostics.as_ref()));
    out
}

pub fn diagnostics_table(diag: Option<&DiagnosticsReport>) -> String {
    let mut out = String::from("Residual diagnostics\n");
    match diag {
        None => out.push_str("  not available\n"),
        Some(d) => {
            let rows = [
                ("observations", Some(d.n as f64)),
                ("mean", Some(d.mean)),
                ("std. dev.", Some(d.sd)),
                ("skewness", d.skewness),
                ("excess kurtosis", d.excess_kurtosis),
                ("AC(1)", d.ac1),
                ("Jarque-Bera p", d.jarque_bera_p),
                ("KS normal p", d.kolmogorov_smirnov_p),
                ("Ljung-Box(20) p", d.ljung_box_p),
                ("ARCH(1) p", d.arch_p),
            ];
            for (name, v) in rows {
                let _ = writeln!(out, "  {name:<18}{:>12}", fmt_opt(v));
            }
        }
    }
    out
}

/// Writes `results.kv`, `report.txt`, `stockout.csv` and `storage.csv`.
/// `extra` is appended to the results record.
pub fn emit_report(
    report: &EstimationReport,
    dates: &[String],
    normalization_factor: f64,
    extra: &KvRecord,
    dir: &Path,
) -> CliResult<()> {
    let mut kv = KvRecord::new();
    kv.int("observations", dates.len()).float("normalization_factor", normalization_factor);
    kv.append(&estimation_record(report)).append(extra);
    write_file(dir, "results.kv", &kv.to_text())?;
    write_file(dir, "report.txt", &estimation_table(report, normalization_factor))?;
    let (stockout, storage) = match &report.filter {
        Some(f) => (f.stockout_prob.as_slice(), f.storage_median.as_slice()),
        None => (&[][..], &[][..]),
    };
    write_file(dir, "stockout.csv", &series_csv(dates, stockout))?;
    write_file(dir, "storage.csv", &series_csv(dates, storage))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use storage_core::{Method, Params, Preset};

    fn sample_report() -> EstimationReport {
        let theta: Params = Preset::Monthly.params();
        EstimationReport {
            method: Method::Sml,
            theta_hat: theta.with_theta([0.1 + 0.2, 1.0 / 3.0, -std::f64::consts::E / 7.0, 0.0212]),
            loglik: 194.3212345678901,
            evaluations: 10,
            iterations: 5,
            diameter: 1e-7,
            converged: true,
            failed: false,
            filter: None,
            diagnostics: None,
            bootstrap_se: None,
            mc_std: None,
        }
    }

    #[test]
    fn partial_report_still_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let dates: Vec<String> = (1..=4).map(|m| format!("2000-{m:02}")).collect();
        emit_report(&sample_report(), &dates, 2.5, &KvRecord::new(), dir.path()).unwrap();
        for f in ["results.kv", "report.txt", "stockout.csv", "storage.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let kv = KvRecord::parse(&std::fs::read_to_string(dir.path().join("results.kv")).unwrap()).unwrap();
        assert_eq!(kv.get("diag.ks_p"), Some(MISSING));
        assert_eq!(kv.get("se.rho"), Some(MISSING));
        let csv = std::fs::read_to_string(dir.path().join("stockout.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn floats_round_trip_exactly() {
        let report = sample_report();
        let kv = KvRecord::parse(&estimation_record(&report).to_text()).unwrap();
        for (name, v) in PARAM_NAMES.iter().zip(report.theta_hat.theta()) {
            assert_eq!(kv.get_f64(name).unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(kv.get_f64("loglik"), Some(report.loglik));
        let mut special = KvRecord::new();
        special.float("x", f64::NEG_INFINITY).float("y", 5e-324);
        let back = KvRecord::parse(&special.to_text()).unwrap();
        assert_eq!(back.get_f64("x"), Some(f64::NEG_INFINITY));
        assert_eq!(back.get_f64("y"), Some(5e-324));
    }
}
