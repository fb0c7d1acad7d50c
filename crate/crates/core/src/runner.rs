//! Scenario assembly and the Monte Carlo NMSE sweep.
//!
//! Every trial draws from its own ChaCha8 stream (`seed`, stream = trial
//! index), and per-trial results are reduced in trial order, so the output
//! does not depend on the worker count. Within a trial one channel and one
//! unit-variance noise vector are shared by all SNR points and priors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{CascadedChannelModel, ChannelRealization, FadingLaw};
use crate::config::{Link, PriorKind, ScenarioConfig};
use crate::correlation::{build_correlation, CorrelationMatrix, FieldType, PropagationParams};
use crate::coupling::{apply_coupling, build_coupling_matrix, CouplingParams};
use crate::error::{Error, Result};
use crate::estimation::{
    assemble_q, cascaded_covariance, complex_gaussian, dft_phase_matrix, is_orthogonal_training,
    ris_factor, OrthogonalLmmse, MAX_LMMSE_DIM,
};
use crate::linalg::{c64, kron, trace_re, CMatrix, CVector};
use crate::mgdist::MgParams;

/// Run-time switches that are not part of the scenario itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub ls_only: bool,
    /// Number of leading trials whose channels are kept for dumping.
    pub keep_channels: usize,
}

/// The three spatial correlations of a cascaded channel.
#[derive(Debug, Clone)]
pub struct LinkCorrelations {
    pub r_ru: CorrelationMatrix,
    pub r_rb: CorrelationMatrix,
    pub r_br: CorrelationMatrix,
}

impl LinkCorrelations {
    pub fn get(&self, link: Link) -> &CorrelationMatrix {
        match link {
            Link::RisUe => &self.r_ru,
            Link::RisBs => &self.r_rb,
            Link::BsRis => &self.r_br,
        }
    }

    pub fn cascaded(&self, transpose_rrb: bool) -> Result<CMatrix> {
        cascaded_covariance(
            &self.r_ru.entries,
            &self.r_rb.entries,
            &self.r_br.entries,
            transpose_rrb,
        )
    }

    /// `(ris, bs)` with `R_cc = ris ⊗ bs`.
    pub fn factors(&self, transpose_rrb: bool) -> Result<CovFactors> {
        Ok(CovFactors {
            ris: ris_factor(&self.r_ru.entries, &self.r_rb.entries, transpose_rrb)?,
            bs: self.r_br.entries.clone(),
        })
    }
}

/// Kronecker factors of a cascaded covariance, `R_cc = ris ⊗ bs`.
#[derive(Debug, Clone)]
pub struct CovFactors {
    pub ris: CMatrix,
    pub bs: CMatrix,
}

impl CovFactors {
    pub fn full(&self) -> CMatrix {
        kron(&self.ris, &self.bs)
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.ris) * trace_re(&self.bs)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            ris: &self.ris * c64(s, 0.0),
            bs: self.bs.clone(),
        }
    }
}

/// A resolved scenario with its derived physical quantities.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub prop: PropagationParams,
    pub ue_mg: MgParams,
    pub bs_mg: MgParams,
    /// BS coupling matrix `(Z + r_d I)^{-1}` when coupling is enabled.
    pub coupling: Option<CMatrix>,
}

impl Scenario {
    /// Resolves and validates `config`.
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let config = config.resolve()?;
        let s = &config.scenario;
        let prop = PropagationParams::new(s.f_c, s.absorption, s.omega)?;
        let ue_mg = config.mg.ris_ue.params().map_err(|e| e.context("mg.ris_ue"))?;
        let bs_mg = config.mg.bs_ris.params().map_err(|e| e.context("mg.bs_ris"))?;
        let coupling = if config.coupling.enabled {
            let bs = config.array(Link::BsRis)?;
            let params = CouplingParams {
                dipole_length: config.coupling.dipole_length_lambda * prop.wavelength,
                dissipation: config.coupling.r_d_ohms,
                spacing: bs.spacing(),
                element_count: bs.element_count(),
            };
            Some(build_coupling_matrix(&params, prop.wavelength).map_err(|e| e.context("coupling"))?)
        } else {
            None
        };
        Ok(Self {
            config,
            prop,
            ue_mg,
            bs_mg,
            coupling,
        })
    }

    /// Correlation of one link under a given field model. Coupling applies
    /// to the BS side only.
    pub fn correlation(&self, link: Link, field: FieldType, coupled: bool) -> Result<CorrelationMatrix> {
        let geom = self.config.array(link)?;
        let s = &self.config.scenario;
        let base = if s.identity_correlation {
            let mut r = CorrelationMatrix::identity(geom.element_count());
            r.entries *= c64(s.omega, 0.0);
            r
        } else {
            let rings = self.config.rings(link)?;
            build_correlation(
                field,
                &geom,
                &rings,
                &self.prop,
                s.quad_points,
                s.farfield_absorption,
            )
            .map_err(|e| e.context(format!("{field}-field correlation of link {link}")))?
        };
        match (&self.coupling, link, coupled) {
            (Some(m), Link::BsRis, true) => apply_coupling(&base, m),
            _ => Ok(base),
        }
    }

    pub fn correlations(&self, field: FieldType, coupled: bool) -> Result<LinkCorrelations> {
        Ok(LinkCorrelations {
            r_ru: self.correlation(Link::RisUe, field, coupled)?,
            r_rb: self.correlation(Link::RisBs, field, coupled)?,
            r_br: self.correlation(Link::BsRis, field, coupled)?,
        })
    }

    /// Correlations the channel is generated from.
    pub fn truth(&self) -> Result<LinkCorrelations> {
        self.correlations(self.config.scenario.field_type, true)
    }

    /// Correlations assumed by a prior.
    pub fn prior(&self, kind: PriorKind) -> Result<LinkCorrelations> {
        let field = self.config.scenario.field_type;
        match kind {
            PriorKind::Matched => self.truth(),
            PriorKind::MismatchFar => self.correlations(FieldType::Far, true),
            PriorKind::MismatchNoCoupling => self.correlations(field, false),
        }
    }

    /// Training matrix `Q` for DFT phases and all-ones pilots.
    pub fn training_matrix(&self) -> Result<CMatrix> {
        let tp = self.config.training_length();
        let phi = dft_phase_matrix(tp, self.config.ris_elements())?;
        assemble_q(&phi, &vec![c64(1.0, 0.0); tp], self.config.bs_antennas())
    }

    pub fn training(&self) -> Result<OrthogonalTraining> {
        OrthogonalTraining::new(self.training_matrix()?, self.config.training_length())
    }
}

/// A training matrix checked to satisfy `Q^H Q = T_p I`.
#[derive(Debug, Clone)]
pub struct OrthogonalTraining {
    q: CMatrix,
    training_length: usize,
}

impl OrthogonalTraining {
    pub fn new(q: CMatrix, training_length: usize) -> Result<Self> {
        if !is_orthogonal_training(&q, training_length, 1e-9 * training_length as f64) {
            return Err(Error::Solver("training matrix is not orthogonal (Q^H Q != T_p I)".into()));
        }
        Ok(Self { q, training_length })
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn training_length(&self) -> usize {
        self.training_length
    }
}

/// Prior label as written to the report.
pub fn prior_label(kind: PriorKind, truth_field: FieldType) -> String {
    match kind {
        PriorKind::Matched => format!("matched-{truth_field}"),
        PriorKind::MismatchFar => "mismatch-far".into(),
        PriorKind::MismatchNoCoupling => "mismatch-nocoupling".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Ls,
    Lmmse,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ls => "ls",
            Estimator::Lmmse => "lmmse",
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub snr_db: f64,
    pub estimator: String,
    pub prior: String,
    /// Absent for mismatched priors, where the closed form does not apply.
    pub nmse_theory: Option<f64>,
    pub nmse_sim: Option<f64>,
    pub stderr_sim: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Fully resolved config the run used.
    pub config: ScenarioConfig,
    pub rows: Vec<ReportRow>,
    /// Realizations of the first trials, when requested.
    pub channels: Vec<ChannelRealization>,
}

impl RunResult {
    pub fn find(&self, snr_db: f64, estimator: &str, prior: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.estimator == estimator && r.prior == prior)
    }
}

/// LMMSE prior prepared for the orthogonal-training fast path.
struct PreparedPrior {
    label: String,
    op: OrthogonalLmmse,
    matched: bool,
}

/// Monte Carlo engine for a fixed generator and a fixed set of priors.
pub struct MonteCarlo {
    model: CascadedChannelModel,
    q: CMatrix,
    training_length: usize,
    truth_trace: f64,
    priors: Vec<PreparedPrior>,
    snr_db: Vec<f64>,
}

/// Mean and standard error of a per-trial quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl MonteCarlo {
    /// `truth`: correlations of the generator. `priors`: label, covariance
    /// and whether the closed-form theory applies. `truth_cov` is the
    /// covariance the NMSE is normalized by.
    pub fn new(
        truth: &LinkCorrelations,
        ue_fading: FadingLaw,
        bs_fading: FadingLaw,
        truth_cov: &CovFactors,
        priors: Vec<(String, CovFactors, bool)>,
        training: OrthogonalTraining,
        snr_db: Vec<f64>,
    ) -> Result<Self> {
        let OrthogonalTraining { q, training_length } = training;
        let model = CascadedChannelModel::new(
            &truth.r_ru.entries,
            &truth.r_br.entries,
            &truth.r_rb.entries,
            ue_fading,
            bs_fading,
        )?;
        let truth_trace = truth_cov.trace();
        if !(truth_trace > 0.0) {
            return Err(Error::Domain("channel covariance has non-positive trace".into()));
        }
        let priors = priors
            .into_iter()
            .map(|(label, cov, matched)| {
                Ok(PreparedPrior {
                    op: OrthogonalLmmse::from_kronecker(&cov.ris, &cov.bs, training_length)
                        .map_err(|e| e.context(format!("prior {label}")))?,
                    label,
                    matched,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            q,
            training_length,
            truth_trace,
            priors,
            snr_db,
        })
    }

    pub fn model(&self) -> &CascadedChannelModel {
        &self.model
    }

    fn slots(&self) -> usize {
        self.snr_db.len() * (1 + self.priors.len()) + 1
    }

    /// Squared error norms of one trial, laid out `[snr][ls, prior...]`,
    /// followed by `‖c‖²`.
    fn trial(&self, seed: u64, index: u64) -> (Vec<f64>, ChannelRealization) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let real = self.model.sample(&mut rng);
        let noise = complex_gaussian(self.q.nrows(), 1.0, &mut rng);
        let matched = self.q.adjoint() * (&self.q * &real.c);
        let filtered_noise = self.q.adjoint() * noise;
        let tp = self.training_length as f64;
        let rotated: Vec<(CVector, CVector, CVector)> = self
            .priors
            .iter()
            .map(|p| {
                (
                    p.op.rotate(&real.c),
                    p.op.rotate(&matched),
                    p.op.rotate(&filtered_noise),
                )
            })
            .collect();
        let mut out = Vec::with_capacity(self.slots());
        for &snr in &self.snr_db {
            // σ² = 1, ρ = γ
            let rho = 10f64.powf(snr / 10.0);
            let sr = rho.sqrt();
            let ls: f64 = matched
                .iter()
                .zip(filtered_noise.iter())
                .zip(real.c.iter())
                .map(|((s, n), c)| ((s * sr + n) / (sr * tp) - c).norm_sqr())
                .sum();
            out.push(ls);
            for (p, (c, s, n)) in self.priors.iter().zip(&rotated) {
                out.push(p.op.error_energy(c, s, n, rho, 1.0));
            }
        }
        out.push(real.c.norm_squared());
        (out, real)
    }

    /// Runs `trials` trials and returns per-slot estimates of
    /// `E‖ĉ − c‖² / tr(R_cc)` (last slot: `E‖c‖² / tr(R_cc)`), plus the
    /// first `keep` realizations.
    pub fn run(&self, seed: u64, trials: usize, keep: usize) -> (Vec<Estimate>, Vec<ChannelRealization>) {
        let per_trial: Vec<(Vec<f64>, Option<ChannelRealization>)> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let (errs, real) = self.trial(seed, t);
                (errs, ((t as usize) < keep).then_some(real))
            })
            .collect();
        let slots = self.slots();
        let mut sum = vec![0.0; slots];
        let mut sq = vec![0.0; slots];
        for (errs, _) in &per_trial {
            for (i, e) in errs.iter().enumerate() {
                let v = e / self.truth_trace;
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        let n = trials as f64;
        let est = (0..slots)
            .map(|i| {
                let mean = sum[i] / n;
                let var = if trials > 1 {
                    ((sq[i] - n * mean * mean) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                Estimate {
                    mean,
                    stderr: (var / n).sqrt(),
                }
            })
            .collect();
        let kept = per_trial.into_iter().filter_map(|(_, r)| r).collect();
        (est, kept)
    }

    /// Report rows for the given estimates (or theory only when `None`).
    pub fn rows(&self, estimates: Option<&[Estimate]>, trials: usize) -> Vec<ReportRow> {
        let stride = 1 + self.priors.len();
        let mk = self.truth_trace_dim() as f64;
        let tp = self.training_length as f64;
        let mut rows = Vec::new();
        for (si, &snr) in self.snr_db.iter().enumerate() {
            let gamma = 10f64.powf(snr / 10.0);
            let pick = |j: usize| estimates.map(|e| e[si * stride + j]);
            let ls = pick(0);
            rows.push(ReportRow {
                snr_db: snr,
                estimator: Estimator::Ls.name().into(),
                prior: "none".into(),
                nmse_theory: Some(mk / (gamma * tp) / self.truth_trace),
                nmse_sim: ls.map(|e| e.mean),
                stderr_sim: ls.map(|e| e.stderr),
                trials,
            });
            for (j, p) in self.priors.iter().enumerate() {
                let e = pick(j + 1);
                rows.push(ReportRow {
                    snr_db: snr,
                    estimator: Estimator::Lmmse.name().into(),
                    prior: p.label.clone(),
                    nmse_theory: p
                        .matched
                        .then(|| p.op.theory_trace(gamma) / self.truth_trace),
                    nmse_sim: e.map(|e| e.mean),
                    stderr_sim: e.map(|e| e.stderr),
                    trials,
                });
            }
        }
        rows
    }

    fn truth_trace_dim(&self) -> usize {
        self.model.ris_elements() * self.model.bs_antennas()
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// NMSE-versus-SNR sweep: LS and LMMSE with the configured priors.
pub fn run_sweep(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunResult> {
    let scenario = Scenario::new(config)?;
    with_pool(opts.workers, || sweep_inner(&scenario, opts))?
}

fn sweep_inner(scenario: &Scenario, opts: &RunOptions) -> Result<RunResult> {
    let cfg = &scenario.config;
    let s = &cfg.scenario;
    let mk = cfg.ris_elements() * cfg.bs_antennas();
    let ls_only = opts.ls_only;
    if !ls_only && mk > MAX_LMMSE_DIM {
        return Err(Error::invalid(
            "M*K",
            format!("{mk} exceeds the LMMSE limit of {MAX_LMMSE_DIM}; use --ls-only"),
        ));
    }
    let truth = scenario.truth().map_err(|e| e.context("ground-truth correlations"))?;
    let truth_cov = truth.factors(s.rcc_transpose_rrb)?;
    let mut priors = Vec::new();
    if !ls_only {
        for kind in cfg.priors() {
            let cov = if kind == PriorKind::Matched {
                truth_cov.clone()
            } else {
                scenario
                    .prior(kind)
                    .and_then(|p| p.factors(s.rcc_transpose_rrb))
                    .map_err(|e| e.context(format!("prior {}", prior_label(kind, s.field_type))))?
            };
            priors.push((
                prior_label(kind, s.field_type),
                cov,
                kind == PriorKind::Matched,
            ));
        }
    }
    let mc = MonteCarlo::new(
        &truth,
        FadingLaw::new(scenario.ue_mg.clone()),
        FadingLaw::new(scenario.bs_mg.clone()),
        &truth_cov,
        priors,
        scenario.training()?,
        s.snr_db.clone(),
    )?;
    let (rows, channels) = if s.trials == 0 {
        (mc.rows(None, 0), Vec::new())
    } else {
        let (est, channels) = mc.run(s.seed, s.trials, opts.keep_channels);
        (mc.rows(Some(&est), s.trials), channels)
    };
    Ok(RunResult {
        config: cfg.clone(),
        rows,
        channels,
    })
}

/// One point of the UE-link fading-severity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRow {
    pub alpha: f64,
    /// Mean and variance of the UE-link MG magnitude.
    pub mg_mean: f64,
    pub mg_variance: f64,
    /// `E‖c‖² / tr(R_cc)`, analytic and sampled.
    pub power_theory: f64,
    pub power_sim: Option<Estimate>,
    pub rows: Vec<ReportRow>,
}

/// Sweeps the UE-link MG shape over `scenario.alpha_grid` with unnormalized
/// UE-link magnitudes, so the cascaded channel power follows `E[X²]` of the
/// UE-link law while the pilot power stays fixed. Every component of the
/// configured UE-link law gets the same shape `α`; weights and rates are
/// kept.
pub fn run_alpha_sweep(config: &ScenarioConfig, opts: &RunOptions) -> Result<Vec<AlphaRow>> {
    let scenario = Scenario::new(config)?;
    let grid = scenario
        .config
        .scenario
        .alpha_grid
        .clone()
        .ok_or_else(|| Error::Config("scenario.alpha_grid is not set".into()))?;
    with_pool(opts.workers, || {
        let cfg = &scenario.config;
        let s = &cfg.scenario;
        let truth = scenario.truth()?;
        let base_cov = truth.factors(s.rcc_transpose_rrb)?;
        let training = scenario.training()?;
        grid.iter()
            .map(|&alpha| {
                let shapes = vec![alpha; scenario.ue_mg.len()];
                let mg = MgParams::new(&scenario.ue_mg.weights(), &shapes, &scenario.ue_mg.rates())?;
                let (mg_mean, mg_variance) = mg.moments();
                let power = mg.second_moment();
                let cov = base_cov.scaled(power);
                let mc = MonteCarlo::new(
                    &truth,
                    FadingLaw::unnormalized(mg),
                    FadingLaw::new(scenario.bs_mg.clone()),
                    &cov,
                    if opts.ls_only {
                        Vec::new()
                    } else {
                        vec![(prior_label(PriorKind::Matched, s.field_type), cov.clone(), true)]
                    },
                    training.clone(),
                    s.snr_db.clone(),
                )?;
                let (rows, power_sim) = if s.trials == 0 {
                    (mc.rows(None, 0), None)
                } else {
                    let (est, _) = mc.run(s.seed, s.trials, 0);
                    // last slot is E‖c‖² / (E[X²] tr(R_cc))
                    let p = est[est.len() - 1];
                    let sampled = Estimate {
                        mean: p.mean * power,
                        stderr: p.stderr * power,
                    };
                    (mc.rows(Some(&est), s.trials), Some(sampled))
                };
                Ok(AlphaRow {
                    alpha,
                    mg_mean,
                    mg_variance,
                    power_theory: power,
                    power_sim,
                    rows,
                })
            })
            .collect()
    })?
}

/// Ground-truth correlation of one link (coupling included where enabled).
pub fn run_correlation_dump(config: &ScenarioConfig, link: &str) -> Result<(ScenarioConfig, CorrelationMatrix)> {
    let link: Link = link.parse()?;
    let scenario = Scenario::new(config)?;
    let field = scenario.config.scenario.field_type;
    let r = scenario.correlation(link, field, true)?;
    Ok((scenario.config, r))
}
