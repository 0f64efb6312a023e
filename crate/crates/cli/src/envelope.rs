//! Compare a `moments.csv` against the generation and propagation envelopes.

use std::path::Path;

use boltzmix::bounds::{
    compute_ak_bk, compute_clb_from, ln_generation_envelope, ln_propagation_envelope,
    omega_from_measurements, LowerBoundHypotheses, OdiConstants, OmegaConstants,
};
use boltzmix::povzner::{kstar_global, DEFAULT_GRID_STEP};
use serde::Serialize;

use crate::config::FileConfig;
use crate::Failure;

/// Slack applied to invariant-set bounds measured from the CSV itself.
pub const MEASURED_SLACK: f64 = 0.05;
/// The `2 + eps` order used when the bounds are measured.
pub const MEASURED_EPS: f64 = 1.0;

#[derive(Debug, Serialize)]
pub struct Violation {
    pub t: f64,
    pub m_k: f64,
    pub envelope: &'static str,
    /// `ln(m_k / (envelope (1 + rel_tol)))`, positive for a violation.
    pub log_excess: f64,
}

#[derive(Debug, Serialize)]
pub struct EnvelopeReport {
    pub k: f64,
    pub k_star: f64,
    pub rel_tol: f64,
    pub omega_source: &'static str,
    pub omega: OmegaConstants,
    pub constants: OdiConstants,
    pub rows: usize,
    pub worst_log_margin_propagation: f64,
    pub worst_log_margin_generation: Option<f64>,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::Usage(format!("cannot read moments file {}: {e}", path.display()))
        })?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Failure::Invalid(format!("{} is empty", path.display())))?
            .split(',')
            .map(|s| s.trim().to_owned())
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| {
                    Failure::Invalid(format!("{} data line {}: {e}", path.display(), n + 1))
                })?;
            if row.len() != header.len() {
                return Err(Failure::Invalid(format!(
                    "{} data line {}: wrong field count",
                    path.display(),
                    n + 1
                )));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Failure::Invalid(format!(
                "{} has no data rows",
                path.display()
            )));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, Failure> {
        let c = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::Invalid(format!("moments file has no `{name}` column")))?;
        Ok(self.rows.iter().map(|r| r[c]).collect())
    }

    fn moment(&self, k: f64) -> Result<Vec<f64>, Failure> {
        self.column(&format!("mk_{k}"))
    }
}

fn range(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

pub fn check(
    config: &FileConfig,
    table: &Table,
    k: f64,
    rel_tol: f64,
) -> Result<EnvelopeReport, Failure> {
    if !(rel_tol >= 0.0) {
        return Err(Failure::Usage(format!(
            "--rel-tol {rel_tol} must be non-negative"
        )));
    }
    let mix = config.mixture()?;
    let kstar = kstar_global(&mix.species, &mix.cross_section, DEFAULT_GRID_STEP)?;
    let t = table.column("t")?;
    let mk = table.moment(k)?;

    let (omega, omega_source) = match config.omega_constants {
        Some(_) => (config.omega()?, "config"),
        None => {
            let m0_cols: Vec<Vec<f64>> = (0..mix.species.len())
                .map(|i| table.column(&format!("m0_{i}")))
                .collect::<Result<_, _>>()?;
            let m0: Vec<f64> = (0..t.len())
                .map(|r| m0_cols.iter().map(|c| c[r]).sum())
                .collect();
            let max = |xs: Vec<f64>| range(&xs).1;
            let omega = omega_from_measurements(
                range(&m0),
                range(&table.column("m2")?),
                max(table.moment(2.0 + MEASURED_EPS)?),
                MEASURED_EPS,
                max(table.moment(kstar.k_star)?),
                MEASURED_SLACK,
            );
            omega.validate()?;
            (omega, "measured")
        }
    };
    let hyp = LowerBoundHypotheses::from_omega(&mix.species, &omega)?;
    let c_lb = compute_clb_from(&mix.species, &mix.cross_section, &hyp)?;
    let consts = compute_ak_bk(k, &kstar, &omega, c_lb, &mix.species, &mix.cross_section)?;

    let ln_tol = rel_tol.ln_1p();
    let ln_prop = ln_propagation_envelope(&consts, mk[0])?;
    let mut violations = Vec::new();
    let mut worst_prop = f64::MIN;
    let mut worst_gen: Option<f64> = None;
    for (&ti, &m) in t.iter().zip(&mk) {
        let excess = m.ln() - ln_prop - ln_tol;
        worst_prop = worst_prop.max(excess);
        if excess > 0.0 {
            violations.push(Violation {
                t: ti,
                m_k: m,
                envelope: "propagation",
                log_excess: excess,
            });
        }
        if ti > 0.0 {
            let excess = m.ln() - ln_generation_envelope(k, &consts, ti)? - ln_tol;
            worst_gen = Some(worst_gen.map_or(excess, |w| w.max(excess)));
            if excess > 0.0 {
                violations.push(Violation {
                    t: ti,
                    m_k: m,
                    envelope: "generation",
                    log_excess: excess,
                });
            }
        }
    }
    Ok(EnvelopeReport {
        k,
        k_star: kstar.k_star,
        rel_tol,
        omega_source,
        omega,
        constants: consts,
        rows: t.len(),
        worst_log_margin_propagation: worst_prop,
        worst_log_margin_generation: worst_gen,
        pass: violations.is_empty(),
        violations,
    })
}
