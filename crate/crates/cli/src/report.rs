//! Report data model and deterministic JSON emission.
//!
//! Every float is written with 17 significant digits in scientific notation,
//! struct fields serialize in declaration order, and maps are avoided, so a
//! re-run with the same config and seed reproduces the bytes exactly.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

use morsehom::config::ExperimentConfig;

/// JSON formatter: pretty indentation with scientific-notation floats.
pub struct SciPretty {
    indent: usize,
    has_value: bool,
}

impl SciPretty {
    pub fn new() -> Self {
        Self {
            indent: 0,
            has_value: false,
        }
    }

    fn newline<W: ?Sized + Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.indent {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl Default for SciPretty {
    fn default() -> Self {
        Self::new()
    }
}

impl Formatter for SciPretty {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.8e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"[")
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"{")
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

/// Serializes any report value to the deterministic JSON form.
pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciPretty::new());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out)?)
}

/// Formats one float the way the CSV and JSON emitters do.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// Report data model
// ---------------------------------------------------------------------------

#[derive(Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub stages: StageReports,
    pub summary: Summary,
}

#[derive(Default, Serialize)]
pub struct StageReports {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assemble: Option<AssembleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub find: Option<FindReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homology: Option<HomologyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnose_cerami: Option<CeramiDiagnosis>,
}

#[derive(Serialize)]
pub struct AssembleReport {
    pub backend: String,
    pub dofs: usize,
    /// `null` encodes an infinite exponent.
    pub p_star: Option<f64>,
    pub p_star_c2: Option<f64>,
}

#[derive(Serialize)]
pub struct FindReport {
    pub count: usize,
    pub points: Vec<PointReport>,
}

#[derive(Serialize)]
pub struct PointReport {
    pub id: usize,
    pub value: f64,
    pub residual: f64,
    pub norm: f64,
    /// Full coefficients only for small problems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Serialize)]
pub struct IndexReport {
    pub points: Vec<PointIndexReport>,
}

#[derive(Serialize)]
pub struct PointIndexReport {
    pub id: usize,
    pub morse_index: usize,
    pub co_index: usize,
    pub null_count: usize,
    pub degenerate: bool,
    pub injectivity_margin: f64,
    pub eigenvalues_head: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accumulation_fraction: Option<f64>,
}

#[derive(Serialize)]
pub struct CertifyReport {
    pub points: Vec<PointCertificate>,
}

#[derive(Serialize)]
pub struct PointCertificate {
    pub id: usize,
    pub skipped_degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halvings: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov_pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion_pass: Option<bool>,
    /// Note: certificates are sampled evidence, not proofs.
    pub evidence: String,
}

#[derive(Serialize)]
pub struct FlowReport {
    pub pairs: Vec<PairReport>,
    pub trajectories: Vec<TrajectorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cerami: Option<CeramiBandReport>,
    pub monotone: bool,
}

#[derive(Serialize)]
pub struct PairReport {
    pub hi: usize,
    pub lo: usize,
    pub count: usize,
    pub parity: u8,
    pub unreliable: bool,
    /// True when the parity came from a rerun against the bumped
    /// nonlinearity (transversality fallback).
    pub perturbed: bool,
    pub sphere_radius: f64,
}

#[derive(Serialize)]
pub struct TrajectorySummary {
    pub id: usize,
    pub terminal: String,
    pub steps: usize,
    pub f_start: f64,
    pub f_end: f64,
    pub cerami_min: f64,
    pub max_norm: f64,
    pub csv: String,
}

#[derive(Serialize)]
pub struct CeramiBandReport {
    pub a: f64,
    pub b: f64,
    pub r0: f64,
    pub r_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gronwall_radius: Option<f64>,
    pub empirical_max_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contained: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimation_error: Option<String>,
}

#[derive(Serialize)]
pub struct HomologyReport {
    pub generators: Vec<Vec<usize>>,
    pub boundaries: Vec<Vec<String>>,
    pub betti: Vec<usize>,
    pub euler_characteristic: i64,
    pub d_squared_zero: bool,
    pub p_spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_betti: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matches_expectation: Option<bool>,
}

#[derive(Serialize)]
pub struct CeramiDiagnosis {
    pub class: String,
    pub q: f64,
    pub p: f64,
    pub threshold_low: f64,
    pub threshold_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub spectrum_head: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonant: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superlinear: Option<SuperlinearReportOut>,
    pub cerami_certified_excluded: bool,
}

#[derive(Serialize)]
pub struct SuperlinearReportOut {
    pub monotonicity: bool,
    pub lower_bound: bool,
    pub ar_declared: bool,
    pub ar_condition: bool,
}

#[derive(Serialize)]
pub struct Summary {
    pub pass: bool,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Manifest: run metadata that may legitimately differ between runs.
#[derive(Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub stages_ms: Vec<(String, u128)>,
    pub artifacts: Vec<String>,
}
