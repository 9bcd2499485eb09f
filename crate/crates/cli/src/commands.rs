use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use tourist_core::dataset::{load_csv, load_csv_like, write_csv, CsvOptions};
use tourist_core::eval::datagen::{gen_gaussian_pair, gen_line_rect_scene, gen_lozenge_scene};
use tourist_core::eval::experiment::{parse_topology, run_experiment, DataSource, ExperimentSpec, MuC};
use tourist_core::eval::saturation::{saturation_csv, saturation_study, saturation_summary};
use tourist_core::idx::load_idx;
use tourist_core::netbuild::build_training_network;
use tourist_core::walker::{component_stats, Walker};
use tourist_core::{
    AbsorbPolicy, AttributeKind, ClassId, ClassNetwork, Error, HighLevelConfig, HybridConfig, HybridModel, LabeledDataset,
    NetConfig, Result, Standardizer,
};

use crate::args::*;
use crate::output::{emit, write_atomic};

pub fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let ctx = Context {
        threads: rayon::current_num_threads(),
        seed: cli.seed,
        output: cli.output,
    };
    match cli.command {
        Command::BuildNet(a) => build_net(&ctx, a),
        Command::WalkStats(a) => walk_stats(&ctx, a),
        Command::Classify(a) => classify(&ctx, a),
        Command::Cv(a) => cv(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
        Command::GenData(a) => gen_data(&ctx, a),
        Command::Saturation(a) => saturation(&ctx, a),
    }
}

struct Context {
    threads: usize,
    seed: Option<u64>,
    output: Option<PathBuf>,
}

impl Context {
    /// Prints the resolved configuration on stderr, ahead of any work.
    fn announce(&self, command: &str, entries: &[(&str, String)]) {
        let mut s = format!("# tourist {command}\n");
        let _ = writeln!(s, "threads = {}", self.threads);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        for (k, v) in entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        let out = self.output.as_ref().map_or("<stdout>".into(), |p| p.display().to_string());
        let _ = writeln!(s, "output = {out}");
        eprint!("{s}");
    }

    /// Writes the CSV and then the summary. With no output path the CSV owns
    /// stdout and the summary moves to stderr.
    fn finish(&self, csv: &str, summary: &str) -> Result<()> {
        emit(self.output.as_deref(), csv)?;
        if self.output.is_some() {
            print!("{summary}");
        } else {
            eprint!("{summary}");
        }
        Ok(())
    }
}

fn value_name(v: impl ValueEnum) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

fn csv_options(d: &DataArgs) -> Result<CsvOptions> {
    Ok(CsvOptions {
        has_header: !d.no_header,
        label_column: d.label_column,
        kinds: d.kinds.as_deref().map(AttributeKind::parse_list).transpose()?,
    })
}

fn data_entries(d: &DataArgs) -> Vec<(&'static str, String)> {
    let mut e = Vec::new();
    match (&d.data, &d.images, &d.labels) {
        (Some(p), _, _) => {
            e.push(("data", p.display().to_string()));
            e.push(("header", (!d.no_header).to_string()));
            e.push(("label_column", d.label_column.map_or("last".into(), |c| c.to_string())));
            e.push(("kinds", d.kinds.clone().unwrap_or_else(|| "all numeric".into())));
        }
        (None, Some(i), Some(l)) => {
            e.push(("images", i.display().to_string()));
            e.push(("labels", l.display().to_string()));
        }
        _ => {}
    }
    e.push(("standardize", d.standardize.to_string()));
    e
}

fn load_data(d: &DataArgs) -> Result<LabeledDataset> {
    match (&d.data, &d.images, &d.labels) {
        (Some(p), _, _) => load_csv(p, &csv_options(d)?),
        (None, Some(i), Some(l)) => load_idx(i, l),
        _ => Err(Error::Config("give --data, or --images with --labels".into())),
    }
}

fn net_config(n: &NetArgs) -> Result<NetConfig> {
    let mut cfg = NetConfig::new(n.k, n.epsilon);
    if let Some(e) = n.test_epsilon {
        cfg = cfg.with_test_epsilon(e);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn net_entries(n: &NetArgs) -> Vec<(&'static str, String)> {
    vec![
        ("k", n.k.to_string()),
        ("epsilon", n.epsilon.to_string()),
        ("test_epsilon", n.test_epsilon.unwrap_or(n.epsilon).to_string()),
    ]
}

fn training_network(d: &DataArgs, n: &NetArgs) -> Result<ClassNetwork> {
    let mut ds = load_data(d)?;
    if d.standardize {
        Standardizer::fit(&ds).transform(&mut ds);
    }
    build_training_network(&ds, &net_config(n)?)
}

fn build_net(ctx: &Context, a: BuildNetArgs) -> Result<()> {
    let mut cfg = data_entries(&a.data);
    cfg.extend(net_entries(&a.net));
    ctx.announce("build-net", &cfg);
    let g = training_network(&a.data, &a.net)?;
    let comps = g.connected_components();
    let mut summary = format!(
        "vertices: {}\nedges: {}\ncomponents: {}\n",
        g.vertex_count(),
        g.edge_count(),
        comps.count
    );
    for (j, name) in g.class_names().iter().enumerate() {
        let _ = writeln!(summary, "  {name}: {} vertices", g.members(ClassId(j)).len());
    }
    ctx.finish(&g.to_edge_list(), &summary)
}

fn walk_stats(ctx: &Context, a: WalkStatsArgs) -> Result<()> {
    let mut cfg = data_entries(&a.data);
    cfg.extend(net_entries(&a.net));
    cfg.push(("mu", a.mu.to_string()));
    ctx.announce("walk-stats", &cfg);
    let g = training_network(&a.data, &a.net)?;
    let mut walker = Walker::new();
    let mut csv = String::from("vertex,class,transient,cycle,trapped\n");
    for v in 0..g.vertex_count() {
        let o = walker.walk(&g, v, a.mu);
        let class = &g.class_names()[g.class_of(v).index()];
        let _ = writeln!(csv, "{v},{class},{},{},{}", o.transient, o.cycle, o.is_trapped());
    }
    let mut summary = String::new();
    for (j, name) in g.class_names().iter().enumerate() {
        let (t, c) = component_stats(&g, ClassId(j), a.mu);
        let _ = writeln!(summary, "{name}: mean transient {t:.4}, mean cycle {c:.4}");
    }
    ctx.finish(&csv, &summary)
}

fn high_entries(h: &HighArgs) -> Vec<(&'static str, String)> {
    vec![
        ("alpha_t", h.alpha_t.to_string()),
        ("alpha_c", h.alpha_c.to_string()),
        (
            "mu_c",
            h.mu_c.map_or(format!("{} of largest class", h.mu_c_frac), |m| m.to_string()),
        ),
        ("topology", h.topology.clone()),
    ]
}

fn model_entries(m: &ModelArgs) -> Vec<(&'static str, String)> {
    let mut e = net_entries(&m.net);
    e.extend(high_entries(&m.high));
    e.push(("low_level", m.low_level.to_string()));
    e.push(("absorb", m.absorb.to_string()));
    e
}

fn mu_c_rule(h: &HighArgs) -> MuC {
    h.mu_c.map_or(MuC::Fraction(h.mu_c_frac), MuC::Fixed)
}

fn classify(ctx: &Context, a: ClassifyArgs) -> Result<()> {
    let mut cfg = data_entries(&a.data);
    cfg.push(("test", a.test.display().to_string()));
    cfg.extend(model_entries(&a.model));
    cfg.push(("lambda", a.lambda.to_string()));
    cfg.push(("report", value_name(a.report)));
    if let Some(t) = &a.lambda_min {
        cfg.push(("lambda_min_target", t.clone()));
        cfg.push(("lambda_step", a.lambda_step.to_string()));
    }
    ctx.announce("classify", &cfg);

    let mut train = load_data(&a.data)?;
    let mut test = load_csv_like(&a.test, &csv_options(&a.data)?, &train)?;
    if a.data.standardize {
        let s = Standardizer::fit(&train);
        s.transform(&mut train);
        s.transform(&mut test);
    }
    let names = test.class_names().to_vec();
    let target = a
        .lambda_min
        .as_deref()
        .map(|t| {
            names
                .iter()
                .position(|n| n == t)
                .map(ClassId)
                .ok_or_else(|| Error::Config(format!("unknown class {t:?} for --lambda-min")))
        })
        .transpose()?;
    let high = HighLevelConfig::new(a.model.high.alpha_t, a.model.high.alpha_c, mu_c_rule(&a.model.high).resolve(&train));
    let mut model = HybridModel::fit(
        &train,
        &a.model.low_level,
        net_config(&a.model.net)?,
        high,
        parse_topology(&a.model.high.topology)?,
    )?;
    let lambda_mins = match target {
        Some(t) => {
            let xs: Vec<Vec<f64>> = test.rows().map(<[f64]>::to_vec).collect();
            let policy = if a.model.absorb { AbsorbPolicy::Absorb } else { AbsorbPolicy::Discard };
            Some(model.clone().lambda_min_sequence(&xs, t, a.lambda_step, policy)?)
        }
        None => None,
    };
    let mut hcfg = HybridConfig::new(a.lambda);
    if a.model.absorb {
        hcfg = hcfg.absorbing();
    }
    let result = model.classify_batch(&test, &hcfg)?;

    let labels = matches!(a.report, ReportKind::Labels | ReportKind::Both);
    let members = matches!(a.report, ReportKind::Memberships | ReportKind::Both);
    let mut csv = String::from("index");
    if labels {
        csv.push_str(",predicted,actual");
    }
    if members {
        for part in ["low", "high", "fused"] {
            for n in &names {
                let _ = write!(csv, ",{part}_{n}");
            }
        }
    }
    if lambda_mins.is_some() {
        csv.push_str(",lambda_min");
    }
    csv.push('\n');
    for (i, d) in result.decisions.iter().enumerate() {
        let _ = write!(csv, "{i}");
        if labels {
            let _ = write!(csv, ",{},{}", names[d.label.index()], names[test.label(i).index()]);
        }
        if members {
            for m in [&d.low, &d.high, &d.fused] {
                for v in m.as_slice() {
                    let _ = write!(csv, ",{v:.6}");
                }
            }
        }
        if let Some(l) = &lambda_mins {
            match l[i] {
                Some(v) => {
                    let _ = write!(csv, ",{v:.4}");
                }
                None => csv.push_str(",none"),
            }
        }
        csv.push('\n');
    }
    let summary = match result.accuracy {
        Some(acc) => format!("classified {} instances, accuracy {:.2}%\n", test.len(), 100.0 * acc),
        None => format!("classified {} instances\n", test.len()),
    };
    ctx.finish(&csv, &summary)
}

fn data_source(d: &DataArgs) -> Result<DataSource> {
    match (&d.data, &d.images, &d.labels) {
        (Some(p), _, _) => Ok(DataSource::Csv {
            path: p.clone(),
            has_header: !d.no_header,
            label_column: d.label_column,
            kinds: d.kinds.clone(),
        }),
        (None, Some(i), Some(l)) => Ok(DataSource::Idx {
            images: i.clone(),
            labels: l.clone(),
        }),
        _ => Err(Error::Config("give --data, or --images with --labels".into())),
    }
}

fn run_spec(ctx: &Context, command: &str, spec: &ExperimentSpec, base: &Path) -> Result<()> {
    spec.validate()?;
    let mut text = String::new();
    for line in spec.to_toml().lines() {
        let _ = writeln!(text, "  {line}");
    }
    ctx.announce(command, &[("experiment", format!("\n{}", text.trim_end()))]);
    let report = run_experiment(spec, base)?;
    ctx.finish(&report.to_csv(), &report.summary())
}

fn cv(ctx: &Context, a: CvArgs) -> Result<()> {
    let m = &a.model;
    let spec = ExperimentSpec {
        data: data_source(&a.data)?,
        k: m.net.k,
        epsilon: m.net.epsilon,
        test_epsilon: m.net.test_epsilon,
        low_level: m.low_level.to_string(),
        topology: m.high.topology.clone(),
        mu_c: m.high.mu_c,
        mu_c_frac: m.high.mu_c_frac,
        mu_c_grid: a.mu_c_grid.clone(),
        lambdas: a.lambdas.clone(),
        alpha_step: a.alpha_step,
        alphas: if a.alpha_step.is_some() {
            Vec::new()
        } else {
            vec![[m.high.alpha_t, m.high.alpha_c]]
        },
        folds: a.folds,
        repetitions: a.reps,
        seed: ctx.seed.unwrap_or(0),
        standardize: a.data.standardize,
        absorb: m.absorb,
    };
    run_spec(ctx, "cv", &spec, Path::new("."))
}

fn sweep(ctx: &Context, a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|source| Error::Io {
        path: a.config.clone(),
        source,
    })?;
    let mut spec = ExperimentSpec::from_toml(&text)?;
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    run_spec(ctx, "sweep", &spec, base)
}

fn csv_text(ds: &LabeledDataset) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

fn gen_data(ctx: &Context, a: GenDataArgs) -> Result<()> {
    let seed = ctx.seed.unwrap_or(0);
    let mut cfg = vec![("scene", value_name(a.scene))];
    if ctx.seed.is_none() {
        cfg.push(("seed", seed.to_string()));
    }
    if a.scene == SceneKind::Gaussian {
        cfg.push(("separation", a.separation.clone()));
        cfg.push(("n", a.n.to_string()));
    }
    if let Some(p) = &a.test_output {
        cfg.push(("test_output", p.display().to_string()));
    }
    ctx.announce("gen-data", &cfg);
    let (train, test) = match a.scene {
        SceneKind::Gaussian => (gen_gaussian_pair(a.separation.parse()?, a.n, seed)?, None),
        SceneKind::Lozenge => {
            let s = gen_lozenge_scene(seed);
            let t = s.test_dataset();
            (s.train, Some(t))
        }
        SceneKind::LineRect => {
            let s = gen_line_rect_scene(seed);
            let t = s.test_dataset();
            (s.train, Some(t))
        }
    };
    match (&a.test_output, &test) {
        (Some(p), Some(t)) => write_atomic(p, csv_text(t)?.as_bytes())?,
        (Some(_), None) => return Err(Error::Config("this scene has no test points".into())),
        _ => {}
    }
    let sizes: Vec<String> = train
        .class_names()
        .iter()
        .zip(train.class_sizes())
        .map(|(n, s)| format!("{n}={s}"))
        .collect();
    let mut summary = format!("training instances: {} ({})\n", train.len(), sizes.join(", "));
    if let Some(t) = &test {
        let _ = writeln!(summary, "test instances: {}", t.len());
    }
    ctx.finish(&csv_text(&train)?, &summary)
}

fn saturation(ctx: &Context, a: SaturationArgs) -> Result<()> {
    let mut cfg = data_entries(&a.data);
    cfg.extend(net_entries(&a.net));
    cfg.push(("mu_max", a.mu_max.map_or("largest class + 1".into(), |m| m.to_string())));
    ctx.announce("saturation", &cfg);
    let g = training_network(&a.data, &a.net)?;
    let study = saturation_study(&g, a.mu_max);
    ctx.finish(&saturation_csv(&study), &saturation_summary(&study))
}
