//! Staged orchestration: assemble -> find -> index -> certify -> flow ->
//! homology -> diagnose-cerami, with per-stage reports and artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use nalgebra::DVector;

use morsehom::cerami::{
    classify_growth, plaplace_spectrum_1d, resonance_flag, superlinear_check, GrowthTag,
};
use morsehom::config::{BackendConfig, ExperimentConfig, GKindConfig};
use morsehom::critical::{deflated_search, CriticalPoint, NewtonOptions};
use morsehom::flow::{
    band_confined_max_norm, connecting_orbit_count, estimate_epsilon, gradient_like_field,
    gronwall_radius, integrate, BlendProfile, CeramiReport as BandDiag, FieldOptions, FlowField,
    IntegrateOptions, ShootOptions, Terminal, Trajectory,
};
use morsehom::functionals::{ExplicitFunctional, Functional, GalerkinFunctional};
use morsehom::homology::{betti, build_morse_complex, euler_characteristic, Generator, PSpec};
use morsehom::linalg::random_unit_vector;
use morsehom::nondeg::{certify_with_search, CertifyOptions, HyperbolicOperator};
use morsehom::rng::substream;
use morsehom::spectral::{accumulation_check, splitting_with, SplitOptions, Splitting};

use crate::report::*;

/// Pipeline stages in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Assemble,
    Find,
    Index,
    Certify,
    Flow,
    Homology,
    Cerami,
}

pub const ALL_STAGES: [Stage; 7] = [
    Stage::Assemble,
    Stage::Find,
    Stage::Index,
    Stage::Certify,
    Stage::Flow,
    Stage::Homology,
    Stage::Cerami,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Assemble => "assemble",
            Stage::Find => "find",
            Stage::Index => "index",
            Stage::Certify => "certify",
            Stage::Flow => "flow",
            Stage::Homology => "homology",
            Stage::Cerami => "diagnose-cerami",
        }
    }

    pub fn parse(name: &str) -> anyhow::Result<Stage> {
        Ok(match name {
            "assemble" => Stage::Assemble,
            "find" => Stage::Find,
            "index" => Stage::Index,
            "certify" => Stage::Certify,
            "flow" => Stage::Flow,
            "homology" => Stage::Homology,
            "diagnose-cerami" | "cerami" => Stage::Cerami,
            other => bail!("unknown stage '{other}'"),
        })
    }

    fn deps(self) -> &'static [Stage] {
        match self {
            Stage::Assemble => &[],
            Stage::Find => &[Stage::Assemble],
            Stage::Index => &[Stage::Find],
            Stage::Certify => &[Stage::Index],
            Stage::Flow => &[Stage::Index],
            Stage::Homology => &[Stage::Flow],
            Stage::Cerami => &[Stage::Assemble],
        }
    }
}

/// Requested stages plus their transitive dependencies, in run order.
pub fn stage_closure(requested: &[Stage]) -> Vec<Stage> {
    let mut enabled = [false; ALL_STAGES.len()];
    fn mark(s: Stage, enabled: &mut [bool; 7]) {
        let idx = ALL_STAGES.iter().position(|x| *x == s).unwrap();
        if !enabled[idx] {
            enabled[idx] = true;
            for d in s.deps() {
                mark(*d, enabled);
            }
        }
    }
    for s in requested {
        mark(*s, &mut enabled);
    }
    ALL_STAGES
        .iter()
        .copied()
        .filter(|s| enabled[ALL_STAGES.iter().position(|x| x == s).unwrap()])
        .collect()
}

/// The functional under study, kept concrete for backend-specific stages.
pub enum Problem {
    Galerkin(GalerkinFunctional<f64>),
    Explicit(ExplicitFunctional<f64>),
}

impl Problem {
    pub fn as_dyn(&self) -> &dyn Functional<f64> {
        match self {
            Problem::Galerkin(f) => f,
            Problem::Explicit(f) => f,
        }
    }
}

/// Mutable pipeline state threaded through the stages.
pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub problem: Option<Problem>,
    pub points: Vec<CriticalPoint<f64>>,
    pub splittings: Vec<Splitting<f64>>,
    pub parities: BTreeMap<(usize, usize), u8>,
    pub unreliable_pairs: Vec<(usize, usize)>,
    /// Restricts shooting to these pairs when set (flow subcommand flag).
    pub pairs_filter: Option<Vec<(usize, usize)>>,
    pub probe_trajectories: Vec<Trajectory<f64>>,
    pub reports: StageReports,
    pub checks: Vec<Check>,
    pub stages_ms: Vec<(String, u128)>,
    pub artifacts: Vec<String>,
}

impl Pipeline {
    pub fn new(cfg: ExperimentConfig, seed: u64, out_dir: PathBuf) -> Self {
        Self {
            cfg,
            seed,
            out_dir,
            problem: None,
            points: Vec::new(),
            splittings: Vec::new(),
            parities: BTreeMap::new(),
            unreliable_pairs: Vec::new(),
            pairs_filter: None,
            probe_trajectories: Vec::new(),
            reports: StageReports::default(),
            checks: Vec::new(),
            stages_ms: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail,
        });
    }

    pub fn run_stages(&mut self, stages: &[Stage]) -> anyhow::Result<()> {
        for stage in stages {
            let t0 = Instant::now();
            let result = match stage {
                Stage::Assemble => self.stage_assemble(),
                Stage::Find => self.stage_find(),
                Stage::Index => self.stage_index(),
                Stage::Certify => self.stage_certify(),
                Stage::Flow => self.stage_flow(),
                Stage::Homology => self.stage_homology(),
                Stage::Cerami => self.stage_cerami(),
            };
            self.stages_ms
                .push((stage.name().to_string(), t0.elapsed().as_millis()));
            result.with_context(|| format!("stage {}", stage.name()))?;
        }
        Ok(())
    }

    fn functional(&self) -> anyhow::Result<&dyn Functional<f64>> {
        Ok(self
            .problem
            .as_ref()
            .ok_or_else(|| anyhow!("assemble stage did not run"))?
            .as_dyn())
    }

    // -- assemble ----------------------------------------------------------

    fn stage_assemble(&mut self) -> anyhow::Result<()> {
        let problem = match self.cfg.problem.backend {
            BackendConfig::Galerkin => {
                let f = self.cfg.problem.build_galerkin()?;
                // Enforce the declared structural constants before anything
                // downstream trusts them.
                match f.mesh().dim {
                    1 => f.psi().validate_sampled::<1>(self.seed, 200)?,
                    _ => f.psi().validate_sampled::<2>(self.seed, 200)?,
                }
                let xs: Vec<Vec<f64>> = f
                    .mesh()
                    .interior
                    .iter()
                    .take(4)
                    .map(|&node| f.mesh().nodes[node].clone())
                    .collect();
                let svals = [-100.0, -3.0, -0.4, 0.0, 0.7, 5.0, 250.0];
                f.g_model().validate_on_grid(&xs, &svals)?;
                Problem::Galerkin(f)
            }
            BackendConfig::Explicit => {
                let name = &self
                    .cfg
                    .problem
                    .explicit
                    .as_ref()
                    .ok_or_else(|| anyhow!("missing explicit block"))?
                    .name;
                Problem::Explicit(morsehom::config::build_explicit(name)?)
            }
        };
        let f = problem.as_dyn();
        self.reports.assemble = Some(AssembleReport {
            backend: match self.cfg.problem.backend {
                BackendConfig::Galerkin => "galerkin".into(),
                BackendConfig::Explicit => "explicit".into(),
            },
            dofs: f.dim(),
            p_star: f.sobolev_conjugate(),
            p_star_c2: f.critical_exponent_c2(),
        });
        self.problem = Some(problem);
        Ok(())
    }

    // -- find ---------------------------------------------------------------

    fn seeds(&self) -> anyhow::Result<Vec<DVector<f64>>> {
        let f = self.functional()?;
        let n = f.dim();
        let grid = &self.cfg.solver.seed_grid;
        let mut seeds = Vec::new();
        match grid.kind.as_str() {
            "zero" => seeds.push(DVector::zeros(n)),
            "modes" => {
                // Dirichlet mode profiles scaled through a ladder of
                // amplitudes; deflation mining explores from each.
                let Some(Problem::Galerkin(gf)) = self.problem.as_ref() else {
                    bail!("mode seeding requires the galerkin backend");
                };
                seeds.push(DVector::zeros(n));
                let per_mode = grid.count.max(1);
                for k in 1..=grid.per_dim.max(1) {
                    let kf = k as f64;
                    let mode = gf.interpolate(|x| match gf.mesh().domain {
                        morsehom::functionals::Domain::Interval { a, b } => {
                            (kf * std::f64::consts::PI * (x[0] - a) / (b - a)).sin()
                        }
                        morsehom::functionals::Domain::Rectangle { x0, x1, y0, y1 } => {
                            (kf * std::f64::consts::PI * (x[0] - x0) / (x1 - x0)).sin()
                                * (kf * std::f64::consts::PI * (x[1] - y0) / (y1 - y0)).sin()
                        }
                    });
                    for j in 1..=per_mode {
                        let amp = grid.radius * j as f64 / per_mode as f64;
                        seeds.push(&mode * amp);
                        seeds.push(&mode * -amp);
                    }
                }
            }
            "grid" => {
                if n > 3 {
                    bail!("grid seeding supports at most 3 dofs, problem has {n}");
                }
                let per = grid.per_dim.max(2);
                let coords: Vec<f64> = (0..per)
                    .map(|i| grid.lo + (grid.hi - grid.lo) * i as f64 / (per - 1) as f64)
                    .collect();
                let mut stack = vec![Vec::new()];
                for _ in 0..n {
                    let mut next = Vec::new();
                    for partial in stack {
                        for &c in &coords {
                            let mut p: Vec<f64> = partial.clone();
                            p.push(c);
                            next.push(p);
                        }
                    }
                    stack = next;
                }
                seeds.extend(stack.into_iter().map(DVector::from_vec));
            }
            "random-ball" => {
                seeds.push(DVector::zeros(n));
                let mut rng = substream(self.seed, "find/seeds");
                for _ in 0..grid.count {
                    let dir = random_unit_vector::<f64, _>(n, &mut rng);
                    let t: f64 = rand::Rng::gen(&mut rng);
                    let r = grid.radius * t.powf(1.0 / n as f64);
                    seeds.push(dir * r);
                }
            }
            other => bail!("unknown seed grid kind '{other}'"),
        }
        Ok(seeds)
    }

    fn stage_find(&mut self) -> anyhow::Result<()> {
        let seeds = self.seeds()?;
        let f = self.functional()?;
        let opts = NewtonOptions {
            tol: self.cfg.solver.tol,
            max_iter: self.cfg.solver.max_iter,
            ..NewtonOptions::default()
        };
        let points = deflated_search(f, &seeds, &opts)?;
        let mut reports = Vec::with_capacity(points.len());
        let mut all_resid = true;
        for p in &points {
            all_resid &= p.residual <= self.cfg.solver.tol;
            reports.push(PointReport {
                id: p.id,
                value: p.value,
                residual: p.residual,
                norm: p.coefficients.norm(),
                coefficients: (p.coefficients.len() <= 16)
                    .then(|| p.coefficients.iter().copied().collect()),
            });
        }
        self.check(
            "find.residuals",
            all_resid,
            format!("{} points at tol {:e}", points.len(), self.cfg.solver.tol),
        );
        self.reports.find = Some(FindReport {
            count: points.len(),
            points: reports,
        });
        self.points = points;
        Ok(())
    }

    // -- index ---------------------------------------------------------------

    fn stage_index(&mut self) -> anyhow::Result<()> {
        let f = self
            .problem
            .as_ref()
            .ok_or_else(|| anyhow!("assemble missing"))?
            .as_dyn();
        let opts = SplitOptions {
            zero_tol_rel: self.cfg.spectral.zero_tol,
        };
        let galerkin = matches!(self.cfg.problem.backend, BackendConfig::Galerkin);
        let mut splittings = Vec::with_capacity(self.points.len());
        let mut out = Vec::with_capacity(self.points.len());
        for cp in &self.points {
            let s = splitting_with(f, cp, &opts)?;
            out.push(PointIndexReport {
                id: cp.id,
                morse_index: s.morse_index,
                co_index: s.co_index(),
                null_count: s.null_count,
                degenerate: s.is_degenerate(),
                injectivity_margin: s.injectivity_margin(),
                eigenvalues_head: s.eigenvalues.iter().take(10).copied().collect(),
                accumulation_fraction: galerkin
                    .then(|| accumulation_check(&s, self.cfg.spectral.window)),
            });
            splittings.push(s);
        }
        for (cp, s) in self.points.iter_mut().zip(&splittings) {
            cp.morse_index = Some(s.morse_index);
        }
        self.reports.index = Some(IndexReport { points: out });
        self.splittings = splittings;
        Ok(())
    }

    // -- certify ---------------------------------------------------------------

    fn stage_certify(&mut self) -> anyhow::Result<()> {
        let f = self
            .problem
            .as_ref()
            .ok_or_else(|| anyhow!("assemble missing"))?
            .as_dyn();
        let samples = self.cfg.nondeg.samples;
        let mut out = Vec::new();
        let mut all_pass = true;
        let all_coeffs: Vec<DVector<f64>> =
            self.points.iter().map(|p| p.coefficients.clone()).collect();
        for (cp, s) in self.points.iter().zip(&self.splittings) {
            if s.is_degenerate() {
                out.push(PointCertificate {
                    id: cp.id,
                    skipped_degenerate: true,
                    delta: None,
                    halvings: None,
                    c: None,
                    c1: None,
                    samples: None,
                    worst_margin: None,
                    lyapunov_pass: None,
                    criterion_pass: None,
                    evidence: "degenerate splitting: certification refused".into(),
                });
                continue;
            }
            let others: Vec<DVector<f64>> = all_coeffs
                .iter()
                .filter(|c| (*c - &cp.coefficients).norm() > 1e-12)
                .cloned()
                .collect();
            let result = if let Some(delta) = self.cfg.nondeg.delta {
                let l = HyperbolicOperator::from_splitting(s)?;
                let opts = CertifyOptions::new(delta, samples, self.seed);
                let lyap = morsehom::nondeg::lyapunov_certificate(f, cp, &l, &opts)?;
                let crit = morsehom::nondeg::criterion_check(f, cp, s, &opts)?;
                morsehom::nondeg::CertifiedPoint {
                    delta,
                    halvings: 0,
                    lyapunov: lyap,
                    criterion: crit,
                }
            } else {
                match certify_with_search(f, cp, s, &others, samples, self.seed) {
                    Ok(c) => c,
                    Err(e) => {
                        all_pass = false;
                        out.push(PointCertificate {
                            id: cp.id,
                            skipped_degenerate: false,
                            delta: None,
                            halvings: None,
                            c: None,
                            c1: None,
                            samples: None,
                            worst_margin: None,
                            lyapunov_pass: Some(false),
                            criterion_pass: Some(false),
                            evidence: format!("search failed: {e}"),
                        });
                        continue;
                    }
                }
            };
            let pass = result.lyapunov.passed() && result.criterion.passed();
            all_pass &= pass;
            out.push(PointCertificate {
                id: cp.id,
                skipped_degenerate: false,
                delta: Some(result.delta),
                halvings: Some(result.halvings),
                c: Some(result.criterion.c),
                c1: Some(result.criterion.c1),
                samples: Some(result.criterion.samples + result.lyapunov.samples),
                worst_margin: Some(
                    result
                        .criterion
                        .worst_margin
                        .min(result.lyapunov.worst_margin),
                ),
                lyapunov_pass: Some(result.lyapunov.passed()),
                criterion_pass: Some(result.criterion.passed()),
                evidence: "sampled evidence".into(),
            });
        }
        self.check(
            "certify.nondegenerate_points",
            all_pass,
            "both certificates pass at every non-degenerate point".into(),
        );
        self.reports.certify = Some(CertifyReport { points: out });
        Ok(())
    }

    // -- flow ---------------------------------------------------------------

    fn blend(&self) -> anyhow::Result<BlendProfile> {
        Ok(match self.cfg.flow.blend.as_str() {
            "cubic" => BlendProfile::Cubic,
            "quintic" => BlendProfile::Quintic,
            "exp" => BlendProfile::Exp,
            other => bail!("unknown blend profile '{other}'"),
        })
    }

    fn integrate_opts(&self) -> IntegrateOptions<f64> {
        IntegrateOptions {
            rtol: self.cfg.flow.rtol,
            atol: self.cfg.flow.atol,
            horizon: self.cfg.flow.horizon,
            ..IntegrateOptions::default()
        }
    }

    fn build_field<'a>(
        &self,
        f: &'a dyn Functional<f64>,
    ) -> anyhow::Result<(FlowField<'a, f64>, Vec<usize>)> {
        let mut crits = Vec::new();
        let mut ids = Vec::new();
        for (cp, s) in self.points.iter().zip(&self.splittings) {
            if s.is_degenerate() {
                continue;
            }
            let op = HyperbolicOperator::from_splitting(s)?;
            ids.push(cp.id);
            crits.push((cp.clone(), op));
        }
        let field = gradient_like_field(
            f,
            &crits,
            &FieldOptions {
                blend: self.blend()?,
                ..FieldOptions::default()
            },
        )?;
        Ok((field, ids))
    }

    fn export_trajectory(&mut self, id: usize, traj: &Trajectory<f64>) -> anyhow::Result<String> {
        let name = format!("traj_{id}.csv");
        let path = self.out_dir.join(&name);
        let mut file = fs::File::create(&path)?;
        let n = traj.states.first().map_or(0, |u| u.len());
        let mut header = String::from("t");
        for i in 1..=n {
            header.push_str(&format!(",u_{i}"));
        }
        header.push_str(",f,cerami\n");
        file.write_all(header.as_bytes())?;
        for k in 0..traj.times.len() {
            let mut row = fmt_float(traj.times[k]);
            for x in traj.states[k].iter() {
                row.push(',');
                row.push_str(&fmt_float(*x));
            }
            row.push(',');
            row.push_str(&fmt_float(traj.values[k]));
            row.push(',');
            row.push_str(&fmt_float(traj.cerami[k]));
            row.push('\n');
            file.write_all(row.as_bytes())?;
        }
        self.artifacts.push(name.clone());
        Ok(name)
    }

    /// A copy of the Galerkin problem with every nonlinearity coefficient
    /// bumped by a seeded relative 1e-6 (explicit fixtures have no
    /// perturbable coefficients).
    fn perturbed_functional(&self) -> anyhow::Result<Option<Problem>> {
        if !matches!(self.cfg.problem.backend, BackendConfig::Galerkin) {
            return Ok(None);
        }
        let mut rng = substream(self.seed, "flow/transversality-bump");
        let bump = 1.0 + 1e-6 * (rand::Rng::gen::<f64>(&mut rng) - 0.5);
        let mut cfg = self.cfg.problem.clone();
        if let Some(g) = cfg.g.as_mut() {
            if let Some(lambda) = g.params.lambda.as_mut() {
                *lambda *= bump;
            }
            if let Some(terms) = g.params.terms.as_mut() {
                for (coef, _) in terms.iter_mut() {
                    *coef *= bump;
                }
            }
        }
        Ok(Some(Problem::Galerkin(cfg.build_galerkin()?)))
    }

    fn stage_flow(&mut self) -> anyhow::Result<()> {
        let problem = self
            .problem
            .take()
            .ok_or_else(|| anyhow!("assemble missing"))?;
        let result = self.flow_with(problem.as_dyn());
        self.problem = Some(problem);
        result
    }

    fn flow_with(&mut self, f: &dyn Functional<f64>) -> anyhow::Result<()> {
        let (field, _ids) = self.build_field(f)?;
        let int_opts = self.integrate_opts();

        // Connecting-orbit parities for every index-gap-1 pair.
        let mut pair_reports = Vec::new();
        let shoot_opts = ShootOptions {
            n_shoot: self.cfg.flow.shoot,
            sphere_radius: self.cfg.flow.sphere_radius,
            integrate: int_opts,
            ..ShootOptions::default()
        };
        let nondeg: Vec<(usize, usize)> =
            field.nodes.iter().map(|n| (n.id, n.morse_index)).collect();
        for &(hi, hi_idx) in &nondeg {
            for &(lo, lo_idx) in &nondeg {
                if hi_idx != lo_idx + 1 {
                    continue;
                }
                if let Some(filter) = &self.pairs_filter {
                    if !filter.contains(&(hi, lo)) {
                        continue;
                    }
                }
                let s = self
                    .points
                    .iter()
                    .position(|p| p.id == hi)
                    .map(|k| &self.splittings[k])
                    .ok_or_else(|| anyhow!("missing splitting for point {hi}"))?;
                let mut report = connecting_orbit_count(&field, hi, s, lo, &shoot_opts)?;
                let mut perturbed = false;
                if report.unreliable {
                    // Transversality fallback: retry against a perturbed
                    // nonlinearity (a seeded 1e-6 relative bump), mirroring a
                    // generic perturbation of the field.
                    if let Some(pf) = self.perturbed_functional()? {
                        let (pfield, _) = self.build_field(pf.as_dyn())?;
                        let retry = connecting_orbit_count(&pfield, hi, s, lo, &shoot_opts)?;
                        perturbed = true;
                        report = retry;
                    }
                }
                self.parities.insert((hi, lo), report.parity);
                if report.unreliable {
                    self.unreliable_pairs.push((hi, lo));
                }
                pair_reports.push(PairReport {
                    hi,
                    lo,
                    count: report.count,
                    parity: report.parity,
                    unreliable: report.unreliable,
                    perturbed,
                    sphere_radius: report.radius,
                });
            }
        }

        // Band for the containment diagnostics, then the annulus constant.
        let (a, b) = self.cfg.flow.band.unwrap_or_else(|| {
            let values: Vec<f64> = self.points.iter().map(|p| p.value).collect();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if values.is_empty() {
                (-1.0, 1.0)
            } else {
                (lo - 1.0, hi + 1.0)
            }
        });
        let max_cp_norm = self
            .points
            .iter()
            .map(|p| p.coefficients.norm())
            .fold(0.0f64, f64::max);
        // Deterministic retry ladder; the annulus hugs the critical-point
        // scale so the sampled minimum is not starved of band hits.
        let mut r0 = 1.0 + 1.25 * max_cp_norm;
        let mut r_max = (2.5 * r0).max(2.0 * max_cp_norm + 3.0);
        let mut epsilon = None;
        let mut estimation_error = None;
        for _ in 0..6 {
            match estimate_epsilon(f, a, b, r0, r_max, 4000, self.seed) {
                Ok(e) => {
                    epsilon = Some(e);
                    estimation_error = None;
                    break;
                }
                Err(e) => {
                    estimation_error = Some(e.to_string());
                    r0 *= 0.5;
                    r_max = (1.5 * r_max).max(2.5 * r0);
                    if r0 < 0.05 {
                        break;
                    }
                }
            }
        }
        let band_diag: Option<BandDiag<f64>> = match epsilon {
            Some(e) => Some(BandDiag {
                r0,
                epsilon: e,
                a,
                b,
                radius: gronwall_radius(r0, e, a, b)?,
                empirical_max_norm: 0.0,
            }),
            None => None,
        };
        let radius = band_diag.as_ref().map(|d| d.radius);

        // Probe trajectories: descent paths from seeded starts, exported as
        // CSV and swept for the band diagnostics. The escape bound follows
        // the containment estimate when one exists.
        let mut probe_opts = int_opts;
        if let Some(r) = radius {
            probe_opts.escape_bound = 10.0 * r;
        }
        let n = f.dim();
        let mut rng = substream(self.seed, "flow/probes");
        let mut trajectories = Vec::new();
        let mut monotone = true;
        let mut summaries = Vec::new();
        for k in 0..self.cfg.flow.probes {
            let dir = random_unit_vector::<f64, _>(n, &mut rng);
            let r: f64 = 0.3 + 0.9 * (k as f64 + 1.0) / self.cfg.flow.probes as f64;
            let start = dir * (r * (1.0 + max_cp_norm));
            let traj = integrate(&field, &start, &probe_opts)?;
            for w in traj.values.windows(2) {
                if w[1] > w[0] + 1e-9 * (1.0 + w[0].abs()) {
                    monotone = false;
                }
            }
            let csv = self.export_trajectory(k, &traj)?;
            summaries.push(TrajectorySummary {
                id: k,
                terminal: terminal_name(&traj.terminal),
                steps: traj.times.len(),
                f_start: *traj.values.first().unwrap_or(&0.0),
                f_end: *traj.values.last().unwrap_or(&0.0),
                cerami_min: traj.cerami_min,
                max_norm: traj.max_norm(),
                csv,
            });
            trajectories.push(traj);
        }
        self.check(
            "flow.monotone",
            monotone,
            "objective decreases along every probe trajectory".into(),
        );
        let no_underflow = trajectories
            .iter()
            .all(|t| t.terminal != Terminal::StepUnderflow);
        self.check(
            "flow.no_step_underflow",
            no_underflow,
            "adaptive steps stayed above the floor".into(),
        );
        if !pair_reports.is_empty() {
            let reliable = self.unreliable_pairs.is_empty();
            self.check(
                "flow.pairs_reliable",
                reliable,
                format!("{} pair(s) shot", pair_reports.len()),
            );
        }

        let empirical = trajectories
            .iter()
            .map(|t| band_confined_max_norm(t, a, b))
            .fold(0.0f64, f64::max);
        let band_diag = band_diag.map(|mut d| {
            d.empirical_max_norm = empirical;
            d
        });
        let contained = radius.map(|r| empirical <= r + 1e-9);
        if let (Some(r), Some(c)) = (radius, contained) {
            self.check(
                "flow.gronwall_containment",
                c,
                format!("band max norm {empirical:e} vs radius {r:e}"),
            );
        }
        if let Some(a) = self.cfg.homology.sublevel {
            // Positive invariance of the sublevel region along probes: once
            // a value drops below the threshold it must stay there.
            let mut invariant = true;
            for t in &trajectories {
                let mut entered = false;
                for v in &t.values {
                    if *v < a {
                        entered = true;
                    } else if entered {
                        invariant = false;
                    }
                }
            }
            self.check(
                "flow.sublevel_positively_invariant",
                invariant,
                format!("no probe exits the sublevel region below {a:e}"),
            );
        }
        self.reports.flow = Some(FlowReport {
            pairs: pair_reports,
            trajectories: summaries,
            cerami: Some(match band_diag {
                Some(d) => CeramiBandReport {
                    a: d.a,
                    b: d.b,
                    r0: d.r0,
                    r_max,
                    epsilon: Some(d.epsilon),
                    gronwall_radius: Some(d.radius),
                    empirical_max_norm: d.empirical_max_norm,
                    contained,
                    estimation_error,
                },
                None => CeramiBandReport {
                    a,
                    b,
                    r0,
                    r_max,
                    epsilon: None,
                    gronwall_radius: None,
                    empirical_max_norm: empirical,
                    contained,
                    estimation_error,
                },
            }),
            monotone,
        });
        self.probe_trajectories = trajectories;
        Ok(())
    }

    // -- homology -------------------------------------------------------------

    fn stage_homology(&mut self) -> anyhow::Result<()> {
        let p_spec = match self.cfg.homology.sublevel {
            Some(a) => PSpec::Sublevel(a),
            None => PSpec::Empty,
        };
        let generators: Vec<Generator> = self
            .points
            .iter()
            .zip(&self.splittings)
            .filter(|(_, s)| !s.is_degenerate())
            .map(|(p, s)| Generator {
                id: p.id,
                index: s.morse_index,
                value: p.value,
            })
            .collect();
        let mc = build_morse_complex(&generators, &self.parities, p_spec)?;
        let betti_numbers = betti(&mc);
        let expected = match p_spec {
            PSpec::Empty => {
                let mut e = vec![0usize; betti_numbers.len().max(1)];
                e[0] = 1;
                Some(e)
            }
            PSpec::Sublevel(_) => None,
        };
        let matches = expected.as_ref().map(|e| *e == betti_numbers);
        self.check(
            "homology.d_squared_zero",
            true,
            "boundary composition vanishes".into(),
        );
        if let Some(m) = matches {
            self.check(
                "homology.matches_expectation",
                m,
                format!("betti {betti_numbers:?}"),
            );
        }
        self.reports.homology = Some(HomologyReport {
            generators: mc.generators.clone(),
            boundaries: mc.boundaries.iter().map(|b| b.bit_rows()).collect(),
            betti: betti_numbers,
            euler_characteristic: euler_characteristic(&mc),
            d_squared_zero: true,
            p_spec: match p_spec {
                PSpec::Empty => "empty".into(),
                PSpec::Sublevel(a) => format!("sublevel:{}", fmt_float(a)),
            },
            expected_betti: expected,
            matches_expectation: matches,
        });
        Ok(())
    }

    // -- diagnose-cerami --------------------------------------------------------

    fn stage_cerami(&mut self) -> anyhow::Result<()> {
        if !self.cfg.cerami.enabled {
            return Ok(());
        }
        let Problem::Galerkin(f) = self
            .problem
            .as_ref()
            .ok_or_else(|| anyhow!("assemble missing"))?
        else {
            // Growth diagnostics only apply to the quasilinear backend.
            return Ok(());
        };
        let p = f.psi().p;
        let n = f.mesh().dim;
        let class = classify_growth(f.g_model(), p, n)?;
        // The spectral resonance check is one-dimensional by construction.
        let spectrum = match f.mesh().domain {
            morsehom::functionals::Domain::Interval { a, b } => {
                plaplace_spectrum_1d(p, b - a, self.cfg.cerami.k_max)?
            }
            morsehom::functionals::Domain::Rectangle { .. } => Vec::new(),
        };
        let resonant = (!spectrum.is_empty())
            .then(|| {
                class
                    .lambda
                    .map(|lam| resonance_flag(lam, &spectrum, self.cfg.cerami.resonance_rel_tol))
            })
            .flatten();
        let superlinear = (class.tag == GrowthTag::Superlinear
            || matches!(
                self.cfg.problem.g.as_ref().map(|g| g.kind),
                Some(GKindConfig::OscillatingLog)
            ))
        .then(|| {
            let r = superlinear_check(f.g_model(), p);
            SuperlinearReportOut {
                monotonicity: r.monotonicity,
                lower_bound: r.lower_bound,
                ar_declared: r.ar_declared,
                ar_condition: r.ar_condition,
            }
        });
        let excluded = class.tag == GrowthTag::Linear && resonant == Some(true);
        self.reports.diagnose_cerami = Some(CeramiDiagnosis {
            class: match class.tag {
                GrowthTag::Sublinear => "sublinear".into(),
                GrowthTag::Linear => "linear".into(),
                GrowthTag::Superlinear => "superlinear".into(),
                GrowthTag::Unclassified => "unclassified".into(),
            },
            q: class.q,
            p: class.p,
            threshold_low: class.threshold_low,
            threshold_high: class.threshold_high,
            lambda: class.lambda,
            spectrum_head: spectrum,
            resonant,
            superlinear,
            cerami_certified_excluded: excluded,
        });
        Ok(())
    }

    pub fn into_report(self) -> (RunReport, Manifest) {
        let pass = self.checks.iter().all(|c| c.pass);
        let mut cfg = self.cfg;
        cfg.seed = self.seed;
        let report = RunReport {
            seed: self.seed,
            config: cfg,
            stages: self.reports,
            summary: Summary {
                pass,
                checks: self.checks,
            },
        };
        let manifest = Manifest {
            tool: "morsehom".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            stages_ms: self.stages_ms,
            artifacts: self.artifacts,
        };
        (report, manifest)
    }
}

pub fn terminal_name(t: &Terminal) -> String {
    match t {
        Terminal::Converged(id) => format!("converged:{id}"),
        Terminal::Escaped => "escaped".into(),
        Terminal::Horizon => "horizon".into(),
        Terminal::StepUnderflow => "step-underflow".into(),
    }
}

/// Writes the report and manifest into the output directory.
pub fn write_outputs(
    out_dir: &Path,
    report: &RunReport,
    manifest: &Manifest,
) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.json"), to_json(report)?)?;
    fs::write(out_dir.join("manifest.json"), to_json(manifest)?)?;
    Ok(())
}
