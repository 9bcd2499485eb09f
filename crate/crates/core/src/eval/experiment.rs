//! Cross-validated sweeps over the compliance term, the walk weights and
//! the critical memory length.
//!
//! For each test instance the low-level membership and the high-level
//! deltas are computed once; every grid cell is then a cheap recombination
//! of those. Absorbing runs are the exception: each cell replays its fold
//! in order because earlier decisions change the network.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, AttributeKind, CsvOptions, LabeledDataset, Standardizer};
use crate::error::{Error, Result};
use crate::eval::cv::{split, stratified_kfold};
use crate::eval::datagen::{self, Separation};
use crate::highlevel::{self, HighLevelConfig, Topology, DEFAULT_SENTINEL_MARGIN};
use crate::hybrid::{HybridConfig, HybridModel};
use crate::idx::load_idx;
use crate::lowlevel::{LowLevelSpec, Membership};
use crate::netbuild::{AbsorbPolicy, NetConfig};

pub const DEFAULT_MU_C_FRACTION: f64 = 0.3;

/// How the critical memory length is chosen for a training set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuC {
    Fixed(usize),
    /// Fraction of the largest class component, rounded.
    Fraction(f64),
}

impl MuC {
    pub fn resolve(self, train: &LabeledDataset) -> usize {
        match self {
            MuC::Fixed(m) => m,
            MuC::Fraction(f) => {
                let n_max = train.class_sizes().into_iter().max().unwrap_or(0);
                (f * n_max as f64).round() as usize
            }
        }
    }
}

/// `(α_t, α_c)` pairs `(i s, 1 - i s)` for `i = 0..=1/s`.
pub fn alpha_grid(step: f64) -> Result<Vec<(f64, f64)>> {
    Ok(crate::hybrid::lambda_grid(step)?
        .into_iter()
        .map(|a| (a, 1.0 - a))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSettings {
    pub net: NetConfig,
    pub low: LowLevelSpec,
    pub topology: Topology,
    pub mu_c: MuC,
    pub sentinel_margin: f64,
    pub standardize: bool,
    pub absorb: AbsorbPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<(f64, f64)>,
    /// Explicit critical lengths to sweep; empty means the single value from
    /// `EvalSettings::mu_c`.
    pub mu_cs: Vec<usize>,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.alphas.is_empty() {
            return Err(Error::config("lambda and alpha grids must be nonempty"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::config(format!("lambda {l} outside [0, 1]")));
        }
        for &(t, c) in &self.alphas {
            HighLevelConfig::new(t, c, 0).validate()?;
        }
        Ok(())
    }

    fn mu_keys(&self) -> Vec<Option<usize>> {
        if self.mu_cs.is_empty() {
            vec![None]
        } else {
            self.mu_cs.iter().copied().map(Some).collect()
        }
    }

    fn cell_count(&self) -> usize {
        self.mu_keys().len() * self.alphas.len() * self.lambdas.len()
    }
}

/// Identifies one grid cell. `mu_c: None` stands for the per-fold value
/// resolved from `EvalSettings::mu_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellKey {
    pub mu_c: Option<usize>,
    pub alpha_t: f64,
    pub alpha_c: f64,
    pub lambda: f64,
}

fn cell_keys(grid: &Grid) -> Vec<CellKey> {
    let mut keys = Vec::with_capacity(grid.cell_count());
    for mu_c in grid.mu_keys() {
        for &(alpha_t, alpha_c) in &grid.alphas {
            for &lambda in &grid.lambdas {
                keys.push(CellKey {
                    mu_c,
                    alpha_t,
                    alpha_c,
                    lambda,
                });
            }
        }
    }
    keys
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tally {
    pub hits: usize,
    pub total: usize,
    pub error: Option<String>,
}

impl Tally {
    fn fail(&mut self, e: &Error) {
        self.error.get_or_insert_with(|| e.to_string());
    }

    fn merge(&mut self, other: &Tally) {
        self.hits += other.hits;
        self.total += other.total;
        if self.error.is_none() {
            self.error.clone_from(&other.error);
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.error.is_none() && self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }
}

/// Standardizes with training statistics when asked, then fits on `train`
/// and scores every cell of `grid` on `test`. Tallies follow the order of
/// `(μ_c, α, λ)` with `λ` varying fastest.
pub fn evaluate_split(
    train: &LabeledDataset,
    test: &LabeledDataset,
    settings: &EvalSettings,
    grid: &Grid,
) -> Result<Vec<Tally>> {
    grid.validate()?;
    let (train, test) = if settings.standardize {
        let s = Standardizer::fit(train);
        let (mut tr, mut te) = (train.clone(), test.clone());
        s.transform(&mut tr);
        s.transform(&mut te);
        (tr, te)
    } else {
        (train.clone(), test.clone())
    };
    let resolved = settings.mu_c.resolve(&train);
    let mus: Vec<usize> = grid
        .mu_keys()
        .into_iter()
        .map(|k| k.unwrap_or(resolved))
        .collect();
    let mu_max = mus.iter().copied().max().unwrap_or(0);
    let fit_cfg = HighLevelConfig {
        sentinel_margin: settings.sentinel_margin,
        ..HighLevelConfig::new(0.5, 0.5, mu_max)
    };
    let model = HybridModel::fit(&train, &settings.low, settings.net, fit_cfg, settings.topology)?;
    let mut tallies = vec![Tally::default(); grid.cell_count()];
    match settings.absorb {
        AbsorbPolicy::Discard => score_discard(&model, &test, &mus, grid, settings, &mut tallies),
        AbsorbPolicy::Absorb => score_absorb(&model, &test, &mus, grid, settings, &mut tallies),
    }
    Ok(tallies)
}

fn score_discard(
    model: &HybridModel,
    test: &LabeledDataset,
    mus: &[usize],
    grid: &Grid,
    settings: &EvalSettings,
    tallies: &mut [Tally],
) {
    let evidence: Vec<_> = (0..test.len())
        .into_par_iter()
        .map_init(
            || model.high().network().clone(),
            |scratch, i| model.evidence_with(scratch, test.row(i)),
        )
        .collect();
    let per_mu = grid.alphas.len() * grid.lambdas.len();
    for (i, ev) in evidence.iter().enumerate() {
        let truth = test.label(i);
        let (low, deltas) = match ev {
            Ok(e) => e,
            Err(e) => {
                tallies.iter_mut().for_each(|t| t.fail(e));
                continue;
            }
        };
        for (m, &mu_c) in mus.iter().enumerate() {
            for (a, &(alpha_t, alpha_c)) in grid.alphas.iter().enumerate() {
                let cfg = HighLevelConfig {
                    alpha_t,
                    alpha_c,
                    mu_c,
                    sentinel_margin: settings.sentinel_margin,
                };
                let base = m * per_mu + a * grid.lambdas.len();
                let cells = &mut tallies[base..base + grid.lambdas.len()];
                match highlevel::high_level_membership(deltas, &cfg) {
                    Ok(high) => {
                        for (t, &lambda) in cells.iter_mut().zip(&grid.lambdas) {
                            let f = Membership::fuse(low, &high, lambda).expect("same class count");
                            t.total += 1;
                            t.hits += usize::from(f.argmax() == truth);
                        }
                    }
                    Err(e) => cells.iter_mut().for_each(|t| t.fail(&e)),
                }
            }
        }
    }
}

fn score_absorb(
    model: &HybridModel,
    test: &LabeledDataset,
    mus: &[usize],
    grid: &Grid,
    settings: &EvalSettings,
    tallies: &mut [Tally],
) {
    let keys = cell_keys(grid);
    let per_mu = grid.alphas.len() * grid.lambdas.len();
    let results: Vec<Result<_>> = keys
        .par_iter()
        .enumerate()
        .map(|(c, key)| {
            let cfg = HighLevelConfig {
                alpha_t: key.alpha_t,
                alpha_c: key.alpha_c,
                mu_c: mus[c / per_mu],
                sentinel_margin: settings.sentinel_margin,
            };
            let mut m = model.clone();
            m.set_high_config(cfg)?;
            m.classify_batch(test, &HybridConfig::new(key.lambda).absorbing())
        })
        .collect();
    for (t, r) in tallies.iter_mut().zip(results) {
        match r {
            Ok(batch) => {
                t.total += batch.decisions.len();
                t.hits += batch
                    .decisions
                    .iter()
                    .zip(test.labels())
                    .filter(|(d, &y)| d.label == y)
                    .count();
            }
            Err(e) => t.fail(&e),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub failed: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub cells: Vec<CellResult>,
    /// Resolved critical length per repetition and fold.
    pub resolved_mu_c: Vec<usize>,
}

impl Report {
    /// Cell with the highest mean; earlier cells win ties.
    pub fn best(&self) -> Option<&CellResult> {
        self.cells
            .iter()
            .filter(|c| c.runs > 0)
            .fold(None, |best: Option<&CellResult>, c| match best {
                Some(b) if b.mean >= c.mean => Some(b),
                _ => Some(c),
            })
    }

    /// Best cell at each `λ`, in grid order.
    pub fn lambda_curve(&self) -> Vec<&CellResult> {
        let mut out: Vec<&CellResult> = Vec::new();
        for c in self.cells.iter().filter(|c| c.runs > 0) {
            match out.iter_mut().find(|b| b.key.lambda == c.key.lambda) {
                Some(b) if b.mean < c.mean => *b = c,
                Some(_) => {}
                None => out.push(c),
            }
        }
        out.sort_by(|a, b| a.key.lambda.total_cmp(&b.key.lambda));
        out
    }

    pub fn cell(&self, pred: impl Fn(&CellKey) -> bool) -> Option<&CellResult> {
        self.cells.iter().find(|c| pred(&c.key))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mu_c,alpha_t,alpha_c,lambda,mean_accuracy,std_accuracy,runs,status\n");
        for c in &self.cells {
            let mu = c.key.mu_c.map_or_else(|| "auto".to_string(), |m| m.to_string());
            let status = c.failed.as_deref().map_or("ok".to_string(), |e| {
                format!("\"failed: {}\"", e.replace('"', "'"))
            });
            let _ = writeln!(
                s,
                "{mu},{},{},{},{:.6},{:.6},{},{status}",
                fmt_num(c.key.alpha_t),
                fmt_num(c.key.alpha_c),
                fmt_num(c.key.lambda),
                c.mean,
                c.std,
                c.runs
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let mu = |k: &CellKey| k.mu_c.map_or_else(|| "auto".to_string(), |m| m.to_string());
        let _ = writeln!(s, "{:>8} {:>8} {:>12}", "lambda", "best", "accuracy");
        for c in self.lambda_curve() {
            let _ = writeln!(
                s,
                "{:>8} {:>8} {:>6.2} ± {:.2}",
                fmt_num(c.key.lambda),
                format!("a_t={}", fmt_num(c.key.alpha_t)),
                100.0 * c.mean,
                100.0 * c.std
            );
        }
        if let Some(b) = self.best() {
            let _ = writeln!(
                s,
                "best: lambda={} alpha_t={} alpha_c={} mu_c={} accuracy={:.2}% ± {:.2}",
                fmt_num(b.key.lambda),
                fmt_num(b.key.alpha_t),
                fmt_num(b.key.alpha_c),
                mu(&b.key),
                100.0 * b.mean,
                100.0 * b.std
            );
        }
        let failed = self.cells.iter().filter(|c| c.failed.is_some()).count();
        if failed > 0 {
            let _ = writeln!(s, "{failed} cell(s) failed");
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" { "0".into() } else { s.into() }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Repeated stratified k-fold cross-validation over every grid cell.
pub fn cross_validate(
    ds: &LabeledDataset,
    settings: &EvalSettings,
    grid: &Grid,
    folds: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Report> {
    grid.validate()?;
    if repetitions == 0 {
        return Err(Error::config("need at least one repetition"));
    }
    let keys = cell_keys(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_rep: Vec<Vec<Tally>> = Vec::with_capacity(repetitions);
    let mut resolved = Vec::new();
    for _ in 0..repetitions {
        let assignment = stratified_kfold(ds, folds, rng.random())?;
        let mut rep = vec![Tally::default(); keys.len()];
        for fold in 0..folds {
            let (tr, te) = split(&assignment, fold);
            let (train, test) = (ds.subset(&tr), ds.subset(&te));
            resolved.push(settings.mu_c.resolve(&train));
            match evaluate_split(&train, &test, settings, grid) {
                Ok(t) => rep.iter_mut().zip(&t).for_each(|(a, b)| a.merge(b)),
                Err(e) => rep.iter_mut().for_each(|t| t.fail(&e)),
            }
        }
        per_rep.push(rep);
    }
    let cells = keys
        .iter()
        .enumerate()
        .map(|(c, &key)| {
            let accs: Vec<f64> = per_rep.iter().filter_map(|r| r[c].accuracy()).collect();
            let failed = per_rep.iter().find_map(|r| r[c].error.clone());
            let (mean, std) = mean_std(&accs);
            CellResult {
                key,
                mean,
                std,
                runs: accs.len(),
                failed,
            }
        })
        .collect();
    Ok(Report {
        cells,
        resolved_mu_c: resolved,
    })
}

/// Where an experiment's data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default = "yes")]
        has_header: bool,
        label_column: Option<usize>,
        /// One `n` (numeric) or `c` (categorical) per feature column.
        kinds: Option<String>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
    Gaussian {
        separation: String,
        n: usize,
        seed: u64,
    },
    Lozenge {
        seed: u64,
    },
    LineRect {
        seed: u64,
    },
}

fn yes() -> bool {
    true
}

impl DataSource {
    /// Loads the training data. Relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<LabeledDataset> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        match self {
            DataSource::Csv {
                path,
                has_header,
                label_column,
                kinds,
            } => {
                let kinds = kinds.as_deref().map(AttributeKind::parse_list).transpose()?;
                load_csv(
                    resolve(path),
                    &CsvOptions {
                        has_header: *has_header,
                        label_column: *label_column,
                        kinds,
                    },
                )
            }
            DataSource::Idx { images, labels } => load_idx(resolve(images), resolve(labels)),
            DataSource::Gaussian { separation, n, seed } => {
                datagen::gen_gaussian_pair(separation.parse::<Separation>()?, *n, *seed)
            }
            DataSource::Lozenge { seed } => Ok(datagen::gen_lozenge_scene(*seed).train),
            DataSource::LineRect { seed } => Ok(datagen::gen_line_rect_scene(*seed).train),
        }
    }
}

/// A complete experiment description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub data: DataSource,
    pub k: usize,
    pub epsilon: f64,
    pub test_epsilon: Option<f64>,
    #[serde(default = "default_low")]
    pub low_level: String,
    #[serde(default = "default_topology")]
    pub topology: String,
    pub mu_c: Option<usize>,
    #[serde(default = "default_mu_frac")]
    pub mu_c_frac: f64,
    #[serde(default)]
    pub mu_c_grid: Vec<usize>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    pub alpha_step: Option<f64>,
    #[serde(default)]
    pub alphas: Vec<[f64; 2]>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub standardize: bool,
    #[serde(default)]
    pub absorb: bool,
}

fn default_low() -> String {
    "wknn:3".into()
}
fn default_topology() -> String {
    "network".into()
}
fn default_mu_frac() -> f64 {
    DEFAULT_MU_C_FRACTION
}
fn default_lambdas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}
fn default_folds() -> usize {
    10
}
fn default_reps() -> usize {
    100
}

pub fn parse_topology(s: &str) -> Result<Topology> {
    match s {
        "network" | "networked" => Ok(Topology::Network),
        "networkless" => Ok(Topology::Networkless),
        _ => Err(Error::config(format!("unknown topology {s:?} (network, networkless)"))),
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::config(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::config("folds must be at least 2"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        self.settings()?;
        self.grid()?.validate()
    }

    pub fn settings(&self) -> Result<EvalSettings> {
        let mut net = NetConfig::new(self.k, self.epsilon);
        if let Some(e) = self.test_epsilon {
            net = net.with_test_epsilon(e);
        }
        net.validate()?;
        if !(self.mu_c_frac >= 0.0 && self.mu_c_frac.is_finite()) {
            return Err(Error::config("mu_c_frac must be nonnegative"));
        }
        Ok(EvalSettings {
            net,
            low: self.low_level.parse()?,
            topology: parse_topology(&self.topology)?,
            mu_c: self.mu_c.map_or(MuC::Fraction(self.mu_c_frac), MuC::Fixed),
            sentinel_margin: DEFAULT_SENTINEL_MARGIN,
            standardize: self.standardize,
            absorb: if self.absorb {
                AbsorbPolicy::Absorb
            } else {
                AbsorbPolicy::Discard
            },
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        let alphas = match (self.alpha_step, self.alphas.is_empty()) {
            (Some(_), false) => return Err(Error::config("give either alpha_step or alphas, not both")),
            (Some(step), true) => alpha_grid(step)?,
            (None, false) => self.alphas.iter().map(|a| (a[0], a[1])).collect(),
            (None, true) => alpha_grid(0.1)?,
        };
        Ok(Grid {
            lambdas: self.lambdas.clone(),
            alphas,
            mu_cs: self.mu_c_grid.clone(),
        })
    }
}

/// Loads the data and cross-validates per `spec`.
pub fn run_experiment(spec: &ExperimentSpec, base: &Path) -> Result<Report> {
    spec.validate()?;
    let ds = spec.data.load(base)?;
    cross_validate(&ds, &spec.settings()?, &spec.grid()?, spec.folds, spec.repetitions, spec.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> EvalSettings {
        EvalSettings {
            net: NetConfig::new(3, 0.1),
            low: LowLevelSpec::WeightedKnn { k: 3 },
            topology: Topology::Network,
            mu_c: MuC::Fraction(0.3),
            sentinel_margin: DEFAULT_SENTINEL_MARGIN,
            standardize: true,
            absorb: AbsorbPolicy::Discard,
        }
    }

    #[test]
    fn alpha_grid_sums_to_one() {
        let g = alpha_grid(0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!(g.iter().all(|(t, c)| (t + c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mu_c_fraction_rounds() {
        let ds = datagen::gen_gaussian_pair(Separation::Heavy, 45, 0).unwrap();
        assert_eq!(MuC::Fraction(0.3).resolve(&ds), 14);
        assert_eq!(MuC::Fixed(3).resolve(&ds), 3);
    }

    #[test]
    fn lambda_zero_is_pure_low_level() {
        let ds = datagen::gen_gaussian_pair(Separation::Slight, 30, 2).unwrap();
        let grid = Grid {
            lambdas: vec![0.0],
            alphas: vec![(0.5, 0.5)],
            mu_cs: vec![],
        };
        let r = cross_validate(&ds, &settings(), &grid, 5, 2, 9).unwrap();
        // Recompute the low-level accuracy directly.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut accs = Vec::new();
        for _ in 0..2 {
            let a = stratified_kfold(&ds, 5, rng.random()).unwrap();
            let mut hits = 0;
            for f in 0..5 {
                let (tr, te) = split(&a, f);
                let (mut train, mut test) = (ds.subset(&tr), ds.subset(&te));
                let s = Standardizer::fit(&train);
                s.transform(&mut train);
                s.transform(&mut test);
                let m = crate::lowlevel::LowLevelModel::fit(&settings().low, &train).unwrap();
                hits += (0..test.len())
                    .filter(|&i| m.membership(test.row(i)).argmax() == test.label(i))
                    .count();
            }
            accs.push(hits as f64 / ds.len() as f64);
        }
        let (mean, _) = mean_std(&accs);
        assert_eq!(r.cells[0].mean, mean);
        assert_eq!(r.cells[0].runs, 2);
    }

    #[test]
    fn reports_are_reproducible() {
        let ds = datagen::gen_gaussian_pair(Separation::Slight, 20, 3).unwrap();
        let grid = Grid {
            lambdas: vec![0.0, 0.5, 1.0],
            alphas: alpha_grid(0.5).unwrap(),
            mu_cs: vec![1, 3],
        };
        let a = cross_validate(&ds, &settings(), &grid, 4, 2, 1).unwrap();
        let b = cross_validate(&ds, &settings(), &grid, 4, 2, 1).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.cells.len(), 2 * 3 * 3);
        assert!(a.cells.iter().all(|c| c.failed.is_none()));
    }

    #[test]
    fn failing_instances_mark_cells_without_aborting() {
        let train = datagen::gen_gaussian_pair(Separation::Slight, 20, 3).unwrap();
        let rows = vec![vec![0.0, 0.0, 0.0]];
        let names = train.class_names().to_vec();
        let test = LabeledDataset::from_rows(rows, vec![crate::dataset::ClassId(0)], names).unwrap();
        let mut s = settings();
        s.standardize = false;
        let grid = Grid {
            lambdas: vec![0.0, 1.0],
            alphas: vec![(0.5, 0.5)],
            mu_cs: vec![],
        };
        let t = evaluate_split(&train, &test, &s, &grid).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|c| c.error.is_some() && c.accuracy().is_none()));
    }

    #[test]
    fn absorb_cells_replay_each_fold() {
        let ds = datagen::gen_gaussian_pair(Separation::Separated, 12, 4).unwrap();
        let mut s = settings();
        let grid = Grid {
            lambdas: vec![0.0, 0.6],
            alphas: vec![(0.5, 0.5)],
            mu_cs: vec![],
        };
        let discard = cross_validate(&ds, &s, &grid, 3, 1, 5).unwrap();
        s.absorb = AbsorbPolicy::Absorb;
        let absorb = cross_validate(&ds, &s, &grid, 3, 1, 5).unwrap();
        // At λ = 0 absorption cannot matter: the low level is never refit.
        assert_eq!(discard.cells[0].mean, absorb.cells[0].mean);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let text = r#"
            k = 3
            epsilon = 0.1
            lambdas = [0.0, 0.5]
            alpha_step = 0.5
            folds = 5
            repetitions = 2
            seed = 4
            [data]
            kind = "gaussian"
            separation = "heavy"
            n = 20
            seed = 1
        "#;
        let spec = ExperimentSpec::from_toml(text).unwrap();
        assert_eq!(spec.grid().unwrap().alphas.len(), 3);
        assert_eq!(ExperimentSpec::from_toml(&spec.to_toml()).unwrap(), spec);
        let report = run_experiment(&spec, Path::new(".")).unwrap();
        assert_eq!(report.cells.len(), 6);
        assert!(ExperimentSpec::from_toml("k = 3\nepsilon = 0.1\nbogus = 1\n[data]\nkind = \"lozenge\"\nseed = 1\n").is_err());
        assert!(ExperimentSpec::from_toml(&text.replace("folds = 5", "folds = 1")).is_err());
    }
}
