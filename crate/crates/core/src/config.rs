//! Scenario configuration (TOML) and its resolution into concrete values.
//!
//! Ring angles `phi_l`, von Mises means `mu_l` and the UE angle may be left
//! out; [`ScenarioConfig::resolve`] then draws them once from the master
//! seed and writes them back, so the resolved config fully determines a run.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{FarfieldAbsorption, FieldType, DEFAULT_QUAD_POINTS};
use crate::coupling::DEFAULT_DISSIPATION_OHMS;
use crate::error::{Error, Result};
use crate::geometry::{validate_rings, wrap_angle, ClusterRing, UePlacement, UlaGeometry};
use crate::mgdist::MgParams;

/// Version written on the first line of every output file.
pub const SCHEMA_VERSION: u32 = 1;

/// ChaCha stream reserved for scenario-level draws; trials use streams
/// `0..trials`.
pub const SETUP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub rings: RingsSection,
    pub mg: MgSection,
    #[serde(default)]
    pub coupling: CouplingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default = "default_name")]
    pub name: String,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Bandwidth, Hz. Recorded in the output only.
    #[serde(default)]
    pub bandwidth: f64,
    /// Molecular absorption coefficient, 1/m.
    #[serde(rename = "K_a", default)]
    pub absorption: f64,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    /// Field model of the ground-truth correlations.
    #[serde(default = "default_field")]
    pub field_type: FieldType,
    #[serde(default)]
    pub farfield_absorption: FarfieldAbsorption,
    /// Use `R_RB^T` in the cascaded covariance.
    #[serde(default)]
    pub rcc_transpose_rrb: bool,
    /// Replace every spatial correlation by the identity.
    #[serde(default)]
    pub identity_correlation: bool,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Training length; defaults to the RIS size.
    #[serde(rename = "T_p", default, skip_serializing_if = "Option::is_none")]
    pub training_length: Option<usize>,
    /// Priors handed to the LMMSE estimator. Defaults to the matched prior
    /// plus every mismatch that applies to the scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<PriorKind>>,
    /// UE-link MG shape grid for the fading-severity sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
}

fn default_name() -> String {
    "scenario".into()
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_quad_points() -> usize {
    DEFAULT_QUAD_POINTS
}

fn default_field() -> FieldType {
    FieldType::Near
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub bs: ArraySpec,
    pub ris: ArraySpec,
    pub ue: UeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub count: usize,
    #[serde(default = "half")]
    pub spacing_lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeSpec {
    /// Distance from the RIS center, m.
    pub distance: f64,
    /// Angle from the RIS broadside, rad; drawn from `[-π/2, π/2]` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

/// Ring parameters of one link, one array entry per ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSet {
    #[serde(rename = "D_l")]
    pub center_distance: Vec<f64>,
    #[serde(rename = "phi_l", default, skip_serializing_if = "Option::is_none")]
    pub center_angle: Option<Vec<f64>>,
    #[serde(rename = "r_l")]
    pub radius: Vec<f64>,
    #[serde(rename = "eps_l")]
    pub power_fraction: Vec<f64>,
    #[serde(rename = "kappa_l")]
    pub concentration: Vec<f64>,
    #[serde(rename = "mu_l", default, skip_serializing_if = "Option::is_none")]
    pub mean_angle: Option<Vec<f64>>,
    #[serde(rename = "N_l")]
    pub scatterer_count: Vec<usize>,
    #[serde(rename = "rho_l", default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris_ue: Option<RingSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris_bs: Option<RingSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_ris: Option<RingSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgSpec {
    pub w: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl MgSpec {
    pub fn params(&self) -> Result<MgParams> {
        MgParams::new(&self.w, &self.alpha, &self.beta)
    }
}

impl From<&MgParams> for MgSpec {
    fn from(p: &MgParams) -> Self {
        Self {
            w: p.weights(),
            alpha: p.shapes(),
            beta: p.rates(),
        }
    }
}

/// Fading laws: `ris_ue` for the UE–RIS vector, `bs_ris` for the RIS–BS
/// matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgSection {
    pub ris_ue: MgSpec,
    pub bs_ris: MgSpec,
}

/// Mutual coupling at the BS array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_rd")]
    pub r_d_ohms: f64,
    #[serde(default = "half")]
    pub dipole_length_lambda: f64,
}

fn default_rd() -> f64 {
    DEFAULT_DISSIPATION_OHMS
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self {
            enabled: false,
            r_d_ohms: DEFAULT_DISSIPATION_OHMS,
            dipole_length_lambda: 0.5,
        }
    }
}

/// The three links with their own ring sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    /// UE–RIS hop, correlation across RIS elements (`R_RU`).
    RisUe,
    /// RIS side of the RIS–BS hop (`R_RB`).
    RisBs,
    /// BS side of the RIS–BS hop (`R_BR`).
    BsRis,
}

impl Link {
    pub const ALL: [Link; 3] = [Link::RisUe, Link::RisBs, Link::BsRis];

    pub fn name(self) -> &'static str {
        match self {
            Link::RisUe => "ris_ue",
            Link::RisBs => "ris_bs",
            Link::BsRis => "bs_ris",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Link::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown link '{s}' (expected one of ris_ue, ris_bs, bs_ris)"
                ))
            })
    }
}

/// Prior covariance handed to the LMMSE estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorKind {
    /// The covariance the channel is generated from.
    #[serde(rename = "matched")]
    Matched,
    /// All correlations rebuilt with the far-field model.
    #[serde(rename = "mismatch-far")]
    MismatchFar,
    /// BS correlation without mutual coupling.
    #[serde(rename = "mismatch-nocoupling")]
    MismatchNoCoupling,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn wavelength(&self) -> f64 {
        crate::geometry::SPEED_OF_LIGHT / self.scenario.f_c
    }

    pub fn ris_elements(&self) -> usize {
        self.geometry.ris.count
    }

    pub fn bs_antennas(&self) -> usize {
        self.geometry.bs.count
    }

    pub fn training_length(&self) -> usize {
        self.scenario
            .training_length
            .unwrap_or(self.geometry.ris.count)
    }

    pub fn ring_set(&self, link: Link) -> Option<&RingSet> {
        match link {
            Link::RisUe => self.rings.ris_ue.as_ref(),
            Link::RisBs => self.rings.ris_bs.as_ref(),
            Link::BsRis => self.rings.bs_ris.as_ref(),
        }
    }

    fn ring_set_mut(&mut self, link: Link) -> Option<&mut RingSet> {
        match link {
            Link::RisUe => self.rings.ris_ue.as_mut(),
            Link::RisBs => self.rings.ris_bs.as_mut(),
            Link::BsRis => self.rings.bs_ris.as_mut(),
        }
    }

    /// Array geometry seen by a link.
    pub fn array(&self, link: Link) -> Result<UlaGeometry> {
        let spec = match link {
            Link::RisUe | Link::RisBs => self.geometry.ris,
            Link::BsRis => self.geometry.bs,
        };
        let name = match link {
            Link::BsRis => "geometry.bs",
            _ => "geometry.ris",
        };
        if !(spec.spacing_lambda > 0.0) {
            return Err(Error::invalid(
                format!("{name}.spacing_lambda"),
                "element spacing must be positive",
            ));
        }
        UlaGeometry::new(spec.count, spec.spacing_lambda * self.wavelength())
            .map_err(|e| e.context(name))
    }

    /// Priors to evaluate, after applying the defaults.
    pub fn priors(&self) -> Vec<PriorKind> {
        if let Some(p) = &self.scenario.priors {
            return p.clone();
        }
        let mut out = vec![PriorKind::Matched];
        if !self.scenario.identity_correlation {
            if self.scenario.field_type == FieldType::Near {
                out.push(PriorKind::MismatchFar);
            }
            if self.coupling.enabled {
                out.push(PriorKind::MismatchNoCoupling);
            }
        }
        out
    }

    /// Fills every randomized or defaulted quantity: `phi_l` uniform in
    /// `[-π/2, π/2)`, `mu_l = phi_l + π` (toward the array) and the UE
    /// angle uniform in `[-π/2, π/2]`, all from the setup stream of the
    /// master seed. Validates the result.
    pub fn resolve(&self) -> Result<Self> {
        let mut out = self.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.seed);
        rng.set_stream(SETUP_STREAM);
        if out.scenario.training_length.is_none() {
            out.scenario.training_length = Some(out.geometry.ris.count);
        }
        if out.scenario.priors.is_none() {
            out.scenario.priors = Some(out.priors());
        }
        for link in Link::ALL {
            let Some(set) = out.ring_set_mut(link) else {
                continue;
            };
            let n = set.center_distance.len();
            if set.center_angle.is_none() {
                set.center_angle = Some(
                    (0..n)
                        .map(|_| -PI / 2.0 + PI * rng.random::<f64>())
                        .collect(),
                );
            }
            if set.mean_angle.is_none() {
                let phi = set.center_angle.clone().unwrap_or_default();
                set.mean_angle = Some(phi.iter().map(|p| wrap_angle(p + PI)).collect());
            }
            if set.reflection.is_none() {
                set.reflection = Some(vec![1.0; n]);
            }
        }
        if out.geometry.ue.angle.is_none() {
            out.geometry.ue.angle = Some(-PI / 2.0 + PI * rng.random::<f64>());
        }
        out.validate()?;
        Ok(out)
    }

    /// Checks a resolved config.
    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if !(s.f_c > 0.0) {
            return Err(Error::invalid("scenario.f_c", "carrier frequency must be positive"));
        }
        if !(s.absorption >= 0.0) {
            return Err(Error::invalid("scenario.K_a", "must be >= 0"));
        }
        if !(s.omega > 0.0) {
            return Err(Error::invalid("scenario.omega", "must be positive"));
        }
        if s.snr_db.is_empty() {
            return Err(Error::invalid("scenario.snr_db", "SNR grid is empty"));
        }
        if let Some(x) = s.snr_db.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid("scenario.snr_db", format!("non-finite SNR {x}")));
        }
        if let Some(grid) = &s.alpha_grid {
            if grid.is_empty() || grid.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::invalid("scenario.alpha_grid", "shapes must be positive"));
            }
        }
        let k = self.geometry.ris.count;
        if self.training_length() < k {
            return Err(Error::invalid(
                "scenario.T_p",
                format!("training length {} < RIS size {k}", self.training_length()),
            ));
        }
        for link in Link::ALL {
            self.array(link)?;
        }
        UePlacement::new(
            self.geometry.ue.distance,
            self.geometry.ue.angle.unwrap_or(0.0),
        )
        .map_err(|e| e.context("geometry.ue"))?;
        self.mg
            .ris_ue
            .params()
            .map_err(|e| e.context("mg.ris_ue"))?;
        self.mg
            .bs_ris
            .params()
            .map_err(|e| e.context("mg.bs_ris"))?;
        if self.coupling.enabled {
            if !(self.coupling.r_d_ohms > 0.0) {
                return Err(Error::invalid("coupling.r_d_ohms", "must be positive"));
            }
            if !(self.coupling.dipole_length_lambda > 0.0) {
                return Err(Error::invalid("coupling.dipole_length_lambda", "must be positive"));
            }
        }
        if !s.identity_correlation {
            for link in Link::ALL {
                self.rings(link)?;
            }
        }
        Ok(())
    }

    /// Ring set of a link as validated [`ClusterRing`]s. Requires the
    /// randomized fields to be resolved.
    pub fn rings(&self, link: Link) -> Result<Vec<ClusterRing>> {
        let ctx = format!("rings.{link}");
        let set = self
            .ring_set(link)
            .ok_or_else(|| Error::Config(format!("missing section [{ctx}]")))?;
        let n = set.center_distance.len();
        let unresolved = || Error::Config(format!("{ctx}: unresolved config (call resolve first)"));
        let phi = set.center_angle.as_ref().ok_or_else(unresolved)?;
        let mu = set.mean_angle.as_ref().ok_or_else(unresolved)?;
        let rho = set.reflection.clone().unwrap_or_else(|| vec![1.0; n]);
        let lens = [
            ("phi_l", phi.len()),
            ("r_l", set.radius.len()),
            ("eps_l", set.power_fraction.len()),
            ("kappa_l", set.concentration.len()),
            ("mu_l", mu.len()),
            ("N_l", set.scatterer_count.len()),
            ("rho_l", rho.len()),
        ];
        if let Some((key, len)) = lens.iter().find(|(_, len)| *len != n) {
            return Err(Error::DimensionMismatch(format!(
                "{ctx}.{key} has {len} entries but D_l has {n}"
            )));
        }
        let rings: Vec<ClusterRing> = (0..n)
            .map(|l| ClusterRing {
                center_distance: set.center_distance[l],
                center_angle: phi[l],
                radius: set.radius[l],
                power_fraction: set.power_fraction[l],
                mean_angle: mu[l],
                concentration: set.concentration[l],
                scatterer_count: set.scatterer_count[l],
                reflection: rho[l],
            })
            .collect();
        validate_rings(&rings).map_err(|e| e.context(ctx))?;
        Ok(rings)
    }
}
