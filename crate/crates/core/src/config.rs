//! Experiment configuration: JSON schema (unknown keys rejected) and
//! builders turning the problem block into evaluatable functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{
    explicit::fixtures, ExplicitFunctional, GModel, GalerkinFunctional, Mesh, PowerTerm, PsiModel,
};

/// Top-level experiment description.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub nondeg: NondegConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub homology: HomologyConfig,
    #[serde(default)]
    pub cerami: CeramiConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()
    }
}

/// Problem block: either a Galerkin discretization or a named explicit
/// fixture.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub backend: BackendConfig,
    #[serde(default)]
    pub psi: Option<PsiConfig>,
    #[serde(default)]
    pub g: Option<GConfig>,
    #[serde(default)]
    pub mesh: Option<MeshConfig>,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub explicit: Option<ExplicitConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BackendConfig {
    Galerkin,
    Explicit,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PsiConfig {
    pub kind: PsiKindConfig,
    pub p: f64,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub mu1: Option<f64>,
    #[serde(default)]
    pub mu2: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PsiKindConfig {
    AreaKappa,
    PPowerPlusQuadratic,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GConfig {
    pub kind: GKindConfig,
    #[serde(default)]
    pub params: GParams,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GKindConfig {
    Zero,
    Linear,
    PlaplaceLinear,
    PowerCombo,
    OscillatingLog,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GParams {
    #[serde(default)]
    pub lambda: Option<f64>,
    /// `(coef, exponent)` pairs for the power-combo kind.
    #[serde(default)]
    pub terms: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub ar_mu: Option<f64>,
    #[serde(default)]
    pub ar_r: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    /// `[a, b]` in 1D, `[x0, x1, y0, y1]` in 2D.
    pub domain: Vec<f64>,
    /// Cells in 1D; cells per axis in 2D.
    pub resolution: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub order: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitConfig {
    pub name: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed_grid: SeedGridConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            seed_grid: SeedGridConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedGridConfig {
    /// `grid` (explicit backends) or `random-ball`.
    pub kind: String,
    pub count: usize,
    pub radius: f64,
    /// Grid extent per coordinate for the `grid` kind.
    pub lo: f64,
    pub hi: f64,
    pub per_dim: usize,
}

impl Default for SeedGridConfig {
    fn default() -> Self {
        Self {
            kind: "random-ball".into(),
            count: 8,
            radius: 1.0,
            lo: -2.0,
            hi: 2.0,
            per_dim: 3,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub zero_tol: f64,
    /// Window for the accumulation diagnostic.
    pub window: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            zero_tol: 1e-6,
            window: 0.1,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct NondegConfig {
    pub samples: usize,
    /// Fixed ball radius; `None` runs the shrinking search.
    pub delta: Option<f64>,
}

impl Default for NondegConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            delta: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub shoot: usize,
    pub sphere_radius: Option<f64>,
    /// Value band `[a, b]` for the containment diagnostics.
    pub band: Option<(f64, f64)>,
    pub horizon: f64,
    /// `cubic`, `quintic`, or `exp`.
    pub blend: String,
    pub rtol: f64,
    pub atol: f64,
    /// Probe trajectories integrated for the descent and band diagnostics.
    pub probes: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            shoot: 64,
            sphere_radius: None,
            band: None,
            horizon: 1e3,
            blend: "quintic".into(),
            rtol: 1e-8,
            atol: 1e-10,
            probes: 8,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomologyConfig {
    /// `null` for the whole space, or a sublevel threshold.
    pub sublevel: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CeramiConfig {
    pub enabled: bool,
    pub k_max: usize,
    pub resonance_rel_tol: f64,
}

impl Default for CeramiConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            k_max: 5,
            resonance_rel_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        match self.backend {
            BackendConfig::Galerkin => {
                let psi = self
                    .psi
                    .as_ref()
                    .ok_or_else(|| Error::Config("problem.psi required for galerkin".into()))?;
                if psi.p <= 2.0 {
                    return Err(Error::Config(format!(
                        "problem.psi.p must satisfy p > 2 (standing hypothesis), got {}",
                        psi.p
                    )));
                }
                let mesh = self
                    .mesh
                    .as_ref()
                    .ok_or_else(|| Error::Config("problem.mesh required for galerkin".into()))?;
                match (mesh.dim, mesh.domain.len()) {
                    (1, 2) | (2, 4) => {}
                    (d, l) => {
                        return Err(Error::Config(format!(
                            "problem.mesh: dim {d} needs {} domain entries, got {l}",
                            if d == 1 { 2 } else { 4 }
                        )))
                    }
                }
                if self.g.is_none() {
                    return Err(Error::Config("problem.g required for galerkin".into()));
                }
                Ok(())
            }
            BackendConfig::Explicit => {
                let ex = self.explicit.as_ref().ok_or_else(|| {
                    Error::Config("problem.explicit required for explicit backend".into())
                })?;
                build_explicit(&ex.name).map(|_| ())
            }
        }
    }

    /// Builds the Galerkin functional described by this block.
    pub fn build_galerkin(&self) -> Result<GalerkinFunctional<f64>> {
        let psi_cfg = self
            .psi
            .as_ref()
            .ok_or_else(|| Error::Config("missing psi block".into()))?;
        let psi = match psi_cfg.kind {
            PsiKindConfig::AreaKappa => {
                PsiModel::area_kappa(psi_cfg.p, psi_cfg.kappa.unwrap_or(1.0))?
            }
            PsiKindConfig::PPowerPlusQuadratic => PsiModel::p_power_plus_quadratic(
                psi_cfg.p,
                psi_cfg.mu1.unwrap_or(0.5),
                psi_cfg.mu2.unwrap_or(4.0),
            )?,
        };
        let g_cfg = self
            .g
            .as_ref()
            .ok_or_else(|| Error::Config("missing g block".into()))?;
        let mut g = match g_cfg.kind {
            GKindConfig::Zero => GModel::zero(),
            GKindConfig::Linear => GModel::linear(
                g_cfg
                    .params
                    .lambda
                    .ok_or_else(|| Error::Config("g.params.lambda required".into()))?,
            ),
            GKindConfig::PlaplaceLinear => GModel::plaplace_linear(
                g_cfg
                    .params
                    .lambda
                    .ok_or_else(|| Error::Config("g.params.lambda required".into()))?,
                psi_cfg.p,
            ),
            GKindConfig::PowerCombo => {
                let terms = g_cfg
                    .params
                    .terms
                    .as_ref()
                    .ok_or_else(|| Error::Config("g.params.terms required".into()))?
                    .iter()
                    .map(|(coef, exponent)| PowerTerm {
                        coef: *coef,
                        exponent: *exponent,
                    })
                    .collect();
                GModel::power_combo(terms)?
            }
            GKindConfig::OscillatingLog => GModel::oscillating_log(),
        };
        if let Some(alpha) = g_cfg.params.alpha {
            g = g.with_alpha(alpha);
        }
        if let Some(r) = g_cfg.params.r {
            g = g.with_threshold(r);
        }
        if let (Some(mu), Some(ar_r)) = (g_cfg.params.ar_mu, g_cfg.params.ar_r) {
            g = g.with_ar(mu, ar_r);
        }
        let mesh_cfg = self
            .mesh
            .as_ref()
            .ok_or_else(|| Error::Config("missing mesh block".into()))?;
        let order = self.quadrature.as_ref().map_or(4, |q| q.order);
        let mesh = match mesh_cfg.dim {
            1 => Mesh::interval(
                mesh_cfg.domain[0],
                mesh_cfg.domain[1],
                mesh_cfg.resolution,
                order,
            )?,
            2 => Mesh::rectangle(
                mesh_cfg.domain[0],
                mesh_cfg.domain[1],
                mesh_cfg.domain[2],
                mesh_cfg.domain[3],
                mesh_cfg.resolution,
                mesh_cfg.resolution,
                order,
            )?,
            d => return Err(Error::Config(format!("unsupported mesh dimension {d}"))),
        };
        GalerkinFunctional::assemble(psi, g, mesh)
    }
}

/// Explicit fixtures by report name.
pub fn build_explicit(name: &str) -> Result<ExplicitFunctional<f64>> {
    match name {
        "double-well" => Ok(fixtures::double_well()),
        "saddle" => Ok(fixtures::saddle()),
        "quartic-saddle" => Ok(fixtures::quartic_saddle()),
        "quartic-1d" => Ok(fixtures::quartic_1d()),
        "half-square-1d" => Ok(fixtures::half_square_1d()),
        "quad-well" => Ok(fixtures::quad_well()),
        other => Err(Error::Config(format!("unknown explicit fixture '{other}'"))),
    }
}
