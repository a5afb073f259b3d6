//! Report structures and writers. Field names and nesting are part of
//! the output contract, so every struct serializes in declaration order
//! and nothing here depends on thread count or wall clock.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ff_core::falsify::{Verdict, WitnessReport};
use ff_core::gateaux::{ContinuityProbe, QuotientResidual};
use ff_core::seminorm::GridCfg;
use ff_core::transport::GrowthRow;
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct FalsifyReport {
    pub claim: ClaimSection,
    pub derived: DerivedSection,
    pub chain: ChainSection,
    pub verdict: &'static str,
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Serialize)]
pub struct ClaimSection {
    pub phi: String,
    pub s0: f64,
    pub i0: usize,
    pub i: usize,
    #[serde(rename = "M")]
    pub bound: f64,
    pub delta: f64,
}

#[derive(Serialize)]
pub struct DerivedSection {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "B")]
    pub b: u64,
    #[serde(rename = "C")]
    pub c: f64,
    pub n: u64,
    pub witness_norm: f64,
}

#[derive(Serialize)]
pub struct ChainSection {
    pub exact_lower: f64,
    pub numeric_seminorm: f64,
    pub grid: GridSection,
}

#[derive(Serialize)]
pub struct GridSection {
    pub resolution: usize,
    pub refinement: usize,
}

pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Violated => "violated",
        Verdict::NoWitness => "no_witness",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn falsify_report(rep: &WitnessReport, seed: u64) -> FalsifyReport {
    FalsifyReport {
        claim: ClaimSection {
            phi: rep.claim.phi.to_string(),
            s0: rep.claim.s0,
            i0: rep.claim.i0,
            i: rep.claim.output_index(),
            bound: rep.claim.bound,
            delta: rep.claim.delta,
        },
        derived: DerivedSection {
            a: rep.a,
            m2: rep.m2.m2,
            b: rep.m2.b,
            c: rep.m2.c,
            n: rep.n,
            witness_norm: rep.witness_norm_exact,
        },
        chain: ChainSection {
            exact_lower: rep.exact_lower,
            numeric_seminorm: rep.numeric.value,
            grid: GridSection {
                resolution: rep.numeric.grid.resolution,
                refinement: rep.numeric.grid.refine_depth,
            },
        },
        verdict: verdict_str(rep.verdict),
        seed,
        version: VERSION,
    }
}

#[derive(Serialize)]
pub struct GateauxReport {
    pub pipeline: &'static str,
    pub phi: String,
    pub x: String,
    pub u: String,
    pub index: usize,
    pub residuals: Vec<QuotientResidual>,
    pub slope: Option<f64>,
    pub multiplier_norm_lower: f64,
    pub continuity: Option<ContinuityProbe>,
    pub verdict: &'static str,
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Serialize)]
pub struct BumpReport {
    pub pipeline: &'static str,
    pub dim: usize,
    pub alpha: Vec<u32>,
    pub origin_partial: f64,
    pub origin_factorial: f64,
    pub calibrated_bound: f64,
    pub rows: Vec<BumpRow>,
    pub verdict: &'static str,
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Serialize)]
pub struct BumpRow {
    pub delta: f64,
    pub max_ratio: f64,
    pub bound: f64,
    pub passes: bool,
    pub worst_kappa: Vec<u32>,
}

#[derive(Serialize)]
pub struct TransportReport {
    pub pipeline: &'static str,
    pub phi3: String,
    pub t0: f64,
    pub i0: usize,
    pub nonlinear: bool,
    pub rows: Vec<GrowthRow>,
    pub verdict: &'static str,
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Serialize)]
pub struct SeminormReport {
    pub pipeline: &'static str,
    pub f: String,
    pub index: usize,
    pub value: f64,
    pub per_index: Vec<f64>,
    pub grid: GridSection,
    pub verdict: &'static str,
    pub seed: u64,
    pub version: &'static str,
}

pub fn grid_section(cfg: GridCfg) -> GridSection {
    GridSection { resolution: cfg.resolution, refinement: cfg.refine_depth }
}

/// Pretty JSON to the given path, or stdout when none.
pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

/// Comma separated table, decimal points, one header line.
pub fn emit_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)
}

pub fn num(v: f64) -> String {
    format!("{v}")
}
