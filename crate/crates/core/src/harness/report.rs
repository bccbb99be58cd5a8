use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::assembly::{ErrorRecord, PenaltyConfig};
use crate::solver::{SolveOptions, SolveReport};

use super::HarnessError;

/// The error quantities tabulated per level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// ||(u - u_h, c - c_h)||_{h,1}
    H1Norm,
    /// ||c - c_h||_{L2(boundary)}
    CBoundary,
    H1Semi,
    H2Semi,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::H1Norm, Metric::CBoundary, Metric::H1Semi, Metric::H2Semi];

    pub fn of(self, e: &ErrorRecord) -> f64 {
        match self {
            Metric::H1Norm => e.h1norm,
            Metric::CBoundary => e.c_l2_boundary,
            Metric::H1Semi => e.h1_semi,
            Metric::H2Semi => e.h2_semi,
        }
    }

    /// (error column, rate column) of the CSV table.
    pub fn columns(self) -> (&'static str, &'static str) {
        match self {
            Metric::H1Norm => ("err_h1norm", "eoc_h1norm"),
            Metric::CBoundary => ("err_c_L2bdry", "eoc_c"),
            Metric::H1Semi => ("err_H1", "eoc_H1"),
            Metric::H2Semi => ("err_H2", "eoc_H2"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub ndofs: usize,
    pub n_elements: usize,
    pub mesh_hash: String,
    pub errors: ErrorRecord,
    /// ||(u_h, c_h)||_{h,1}
    pub solution_norm: f64,
    /// ||f||_{L2}
    pub source_l2: f64,
    pub assembly_seconds: f64,
    pub solve: SolveReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMetadata {
    pub problem: String,
    pub degree: usize,
    pub grading: Option<f64>,
    pub penalties: PenaltyConfig,
    pub solver: SolveOptions,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<LevelResult>,
}

/// Rates log(e_{i-1}/e_i) / log(h_{i-1}/h_i); None for the first row and for undefined pairs.
pub fn eoc(errors: &[f64], h: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for i in 1..errors.len() {
        let (e0, e1, h0, h1) = (errors[i - 1], errors[i], h[i - 1], h[i]);
        if e0 > 0.0 && e1 > 0.0 && h0 > 0.0 && h1 > 0.0 && h0 != h1 {
            let r = (e0 / e1).ln() / (h0 / h1).ln();
            if r.is_finite() {
                out[i] = Some(r);
            }
        }
    }
    out
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        String::new()
    }
}

impl ErrorReport {
    pub fn h(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    pub fn ndofs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ndofs as f64).collect()
    }

    pub fn values(&self, m: Metric) -> Vec<f64> {
        self.rows.iter().map(|r| m.of(&r.errors)).collect()
    }

    pub fn eocs(&self, m: Metric) -> Vec<Option<f64>> {
        eoc(&self.values(m), &self.h())
    }

    /// Rates of the last `pairs` level pairs, or None if there are fewer.
    pub fn last_eocs(&self, m: Metric, pairs: usize) -> Option<Vec<f64>> {
        let r = self.eocs(m);
        if pairs == 0 || r.len() < pairs + 1 {
            return None;
        }
        r[r.len() - pairs..].iter().cloned().collect()
    }

    pub fn mean_last_eoc(&self, m: Metric, pairs: usize) -> Option<f64> {
        self.last_eocs(m, pairs)
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Slope of the metric against ndofs over the last `points` levels.
    pub fn ndofs_slope(&self, m: Metric, points: usize) -> Option<f64> {
        let n = self.rows.len();
        if points < 2 || n < points {
            return None;
        }
        Some(loglog_slope(&self.ndofs()[n - points..], &self.values(m)[n - points..]))
    }

    /// The rate table; identical input gives byte-identical output.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["h", "ndofs"];
        for m in Metric::ALL {
            let (e, r) = m.columns();
            header.extend([e, r]);
        }
        w.write_record(&header)?;
        let rates: Vec<Vec<Option<f64>>> = Metric::ALL.iter().map(|m| self.eocs(*m)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![num(row.h), row.ndofs.to_string()];
            for (m, r) in Metric::ALL.iter().zip(&rates) {
                rec.push(num(m.of(&row.errors)));
                rec.push(r[i].map(num).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::io("csv buffer", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, self.to_csv()?).map_err(|e| HarnessError::io(&csv_path, e))?;
        let json_path = dir.join(format!("{stem}.json"));
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&json_path, json).map_err(|e| HarnessError::io(&json_path, e))?;
        Ok(vec![csv_path, json_path])
    }

    /// Aligned text table for terminals.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}  p = {}  sigma rule {:?}  c_* = {}\n",
            self.metadata.problem, self.metadata.degree, self.metadata.penalties.sigma_rule, self.metadata.penalties.c_star
        );
        s.push_str(&format!(
            "{:>9} {:>8} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6} {:>9}\n",
            "h", "ndofs", "h1norm", "eoc", "c L2bdry", "eoc", "H1", "eoc", "H2", "eoc", "residual"
        ));
        let rates: Vec<Vec<Option<f64>>> = Metric::ALL.iter().map(|m| self.eocs(*m)).collect();
        for (i, r) in self.rows.iter().enumerate() {
            s.push_str(&format!("{:>9.4} {:>8}", r.h, r.ndofs));
            for (m, rate) in Metric::ALL.iter().zip(&rates) {
                let e = rate[i].map(|v| format!("{v:.2}")).unwrap_or_default();
                s.push_str(&format!(" {:>10.3e} {:>6}", m.of(&r.errors), e));
            }
            s.push_str(&format!(" {:>9.1e}\n", r.solve.final_residual));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_of_power_laws() {
        let h = [0.4, 0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(3)).collect();
        let r = eoc(&e, &h);
        assert!(r[0].is_none());
        for v in &r[1..] {
            assert!((v.unwrap() - 3.0).abs() < 1e-12);
        }
        let n = [100.0, 400.0, 1600.0];
        let y: Vec<f64> = n.iter().map(|v: &f64| 7.0 * v.powf(-0.25)).collect();
        assert!((loglog_slope(&n, &y) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn undefined_rates_are_empty() {
        let r = eoc(&[1.0, 0.0, 0.5], &[0.2, 0.1, 0.05]);
        assert_eq!(r, vec![None, None, None]);
        assert_eq!(eoc(&[1.0, 0.5], &[0.1, 0.1]), vec![None, None]);
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn stored_values_reproduce_rates(
            c in 1e-6f64..1e3,
            rate in 0.5f64..6.0,
            h0 in 0.05f64..0.5,
            ratios in prop::collection::vec(1.2f64..3.0, 1..6),
        ) {
            let mut h = vec![h0];
            for r in &ratios {
                h.push(h.last().unwrap() / r);
            }
            let e: Vec<f64> = h.iter().map(|v| c * v.powf(rate)).collect();
            let back = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| num(*x).parse().unwrap()).collect() };
            let (hs, es) = (back(&h), back(&e));
            prop_assert_eq!(&hs, &h);
            prop_assert_eq!(&es, &e);
            for r in eoc(&es, &hs).into_iter().skip(1) {
                prop_assert!((r.unwrap() - rate).abs() < 1e-9);
            }
        }
    }
}
