//! Command-line surface: `generate`, `seed`, `train`, `eval` and `pipeline`.
//!
//! Settings come from defaults, then an optional INI-style file
//! (`[section]` headers, `key = value` lines), then flags. Every run writes
//! the resolved settings to `config.ini` in its output directory; feeding
//! that file back with `--config` reproduces the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{DmgdError, Result};
use crate::eval::{evaluate_all, EvalConfig};
use crate::graph::{load_edge_list, Graph, GroundTruth};
use crate::spheres::SphereState;
use crate::synth::{generate_planted_partition, seed_outliers, SeedingConfig, SynthConfig};
use crate::trainer::{load_embeddings_csv, train, AlphaSpec, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "dmgd", version, about = "Joint graph embedding, community detection and community outlier scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum CommandName {
    Generate,
    Seed,
    Train,
    Eval,
    Pipeline,
}

#[derive(Debug, Subcommand)]
pub enum CommandKind {
    /// Write a planted-partition graph and its labels.
    Generate(Flags),
    /// Perturb nodes of a labelled graph into community outliers.
    Seed(Flags),
    /// Train on a graph and write a checkpoint directory.
    Train(Flags),
    /// Score a checkpoint against ground truth.
    Eval(Flags),
    /// generate, seed, train and eval in one output directory.
    Pipeline(Flags),
}

impl CommandKind {
    pub fn split(self) -> (CommandName, Flags) {
        match self {
            CommandKind::Generate(f) => (CommandName::Generate, f),
            CommandKind::Seed(f) => (CommandName::Seed, f),
            CommandKind::Train(f) => (CommandName::Train, f),
            CommandKind::Eval(f) => (CommandName::Eval, f),
            CommandKind::Pipeline(f) => (CommandName::Pipeline, f),
        }
    }
}

/// Flags shared by every subcommand. Each maps to one config-file key.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long)]
    pub flags: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Checkpoint directory read by `eval`.
    #[arg(long)]
    pub checkpoint: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long, conflicts_with = "nu")]
    pub alpha: Option<String>,
    /// Expected outlier fraction; sets alpha = K / (nu N).
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Single gamma value; disables the gamma grid.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Comma-separated gamma values to search.
    #[arg(long)]
    pub gamma_grid: Option<String>,
    #[arg(long)]
    pub t_outer: Option<String>,
    #[arg(long)]
    pub pretrain_epochs: Option<String>,
    #[arg(long)]
    pub epochs_per_iter: Option<String>,
    /// Community sample size, or `all`.
    #[arg(long)]
    pub s_comm: Option<String>,
    /// Neighbor sample size, or `all`.
    #[arg(long)]
    pub s_nbr: Option<String>,
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub seed_model: Option<String>,
    #[arg(long)]
    pub seed_kmeans: Option<String>,
    #[arg(long)]
    pub seed_sampling: Option<String>,
    #[arg(long)]
    pub train_frac_list: Option<String>,
    #[arg(long)]
    pub recall_l_list: Option<String>,
    /// Comma-separated community sizes for `generate`.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub p_intra: Option<String>,
    #[arg(long)]
    pub p_inter: Option<String>,
    /// Number of equal-sized communities for `generate`.
    #[arg(long)]
    pub communities: Option<String>,
    #[arg(long)]
    pub synth_seed: Option<String>,
    #[arg(long)]
    pub outlier_fraction: Option<String>,
    #[arg(long)]
    pub far_quantile: Option<String>,
    #[arg(long)]
    pub seeding_seed: Option<String>,
}

impl Flags {
    /// `(section, key, value)` for every flag that was given, in a fixed order.
    fn assignments(&self) -> Vec<(&'static str, &'static str, &str)> {
        let pairs: [(&str, &str, &Option<String>); 31] = [
            ("paths", "graph", &self.graph),
            ("paths", "labels", &self.labels),
            ("paths", "flags", &self.flags),
            ("paths", "out", &self.out),
            ("paths", "checkpoint", &self.checkpoint),
            ("train", "k", &self.k),
            ("train", "m", &self.m),
            ("train", "alpha", &self.alpha),
            ("train", "nu", &self.nu),
            ("train", "beta", &self.beta),
            ("train", "gamma", &self.gamma),
            ("train", "gamma_grid", &self.gamma_grid),
            ("train", "t_outer", &self.t_outer),
            ("train", "pretrain_epochs", &self.pretrain_epochs),
            ("train", "epochs_per_iter", &self.epochs_per_iter),
            ("train", "s_comm", &self.s_comm),
            ("train", "s_nbr", &self.s_nbr),
            ("train", "lr", &self.lr),
            ("train", "seed_model", &self.seed_model),
            ("train", "seed_kmeans", &self.seed_kmeans),
            ("train", "seed_sampling", &self.seed_sampling),
            ("eval", "train_frac_list", &self.train_frac_list),
            ("eval", "recall_l_list", &self.recall_l_list),
            ("synth", "communities", &self.communities),
            ("synth", "sizes", &self.sizes),
            ("synth", "p_intra", &self.p_intra),
            ("synth", "p_inter", &self.p_inter),
            ("synth", "seed", &self.synth_seed),
            ("seeding", "outlier_fraction", &self.outlier_fraction),
            ("seeding", "far_quantile", &self.far_quantile),
            ("seeding", "seed", &self.seeding_seed),
        ];
        pairs
            .into_iter()
            .filter_map(|(s, k, v)| v.as_deref().map(|v| (s, k, v)))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Paths {
    pub graph: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub flags: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub seeding: SeedingConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

const KEYS: &[(&str, &[&str])] = &[
    ("paths", &["graph", "labels", "flags", "out", "checkpoint"]),
    ("synth", &["communities", "sizes", "p_intra", "p_inter", "seed"]),
    ("seeding", &["outlier_fraction", "far_quantile", "seed"]),
    (
        "train",
        &[
            "k",
            "m",
            "hidden",
            "leaky_slope",
            "row_normalize",
            "alpha",
            "nu",
            "beta",
            "gamma",
            "gamma_grid",
            "t_outer",
            "pretrain_epochs",
            "epochs_per_iter",
            "s_comm",
            "s_nbr",
            "lr",
            "seed_model",
            "seed_kmeans",
            "seed_sampling",
            "qp_tol",
            "qp_max_iter_per_member",
            "boundary_tol",
            "rel_tol",
            "final_refresh_rounds",
        ],
    ),
    ("eval", &["train_frac_list", "recall_l_list", "seed"]),
];

fn valid_keys() -> String {
    KEYS.iter()
        .flat_map(|(s, ks)| ks.iter().map(move |k| format!("{s}.{k}")))
        .collect::<Vec<_>>()
        .join(", ")
}

fn mismatch(section: &str, key: &str, value: &str, expected: &str) -> DmgdError {
    DmgdError::InvalidConfig(format!("key {section}.{key}: expected {expected}, got `{value}`"))
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, value: &str, expected: &str) -> Result<T> {
    value.trim().parse().map_err(|_| mismatch(section, key, value, expected))
}

fn parse_list<T: std::str::FromStr>(section: &str, key: &str, value: &str, expected: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| mismatch(section, key, value, expected)))
        .collect()
}

fn parse_sample(section: &str, key: &str, value: &str) -> Result<Option<usize>> {
    if value.trim() == "all" {
        Ok(None)
    } else {
        parse_num(section, key, value, "a positive integer or `all`").map(Some)
    }
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(mismatch(section, key, value, "true or false")),
    }
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn new(command: CommandName) -> Self {
        RunConfig {
            command,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            seeding: SeedingConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }

    /// Applies one `section.key = value` setting.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let (s, k, v) = (section, key, value);
        let uint = "an unsigned integer";
        let float = "a number";
        let t = &mut self.train;
        match (s, k) {
            ("paths", "graph") => self.paths.graph = Some(PathBuf::from(v.trim())),
            ("paths", "labels") => self.paths.labels = Some(PathBuf::from(v.trim())),
            ("paths", "flags") => self.paths.flags = Some(PathBuf::from(v.trim())),
            ("paths", "out") => self.paths.out = Some(PathBuf::from(v.trim())),
            ("paths", "checkpoint") => self.paths.checkpoint = Some(PathBuf::from(v.trim())),
            ("synth", "communities") => {
                let k: usize = parse_num(s, k, v, uint)?;
                let size = self.synth.community_sizes.first().copied().unwrap_or(50);
                self.synth.community_sizes = vec![size; k];
            }
            ("synth", "sizes") => self.synth.community_sizes = parse_list(s, k, v, "a comma-separated list of sizes")?,
            ("synth", "p_intra") => self.synth.p_intra = parse_num(s, k, v, float)?,
            ("synth", "p_inter") => self.synth.p_inter = parse_num(s, k, v, float)?,
            ("synth", "seed") => self.synth.rng_seed = parse_num(s, k, v, uint)?,
            ("seeding", "outlier_fraction") => self.seeding.outlier_fraction = parse_num(s, k, v, float)?,
            ("seeding", "far_quantile") => self.seeding.far_quantile = parse_num(s, k, v, float)?,
            ("seeding", "seed") => self.seeding.rng_seed = parse_num(s, k, v, uint)?,
            ("train", "k") => t.k = parse_num(s, k, v, uint)?,
            ("train", "m") => t.embedding_dim = parse_num(s, k, v, uint)?,
            ("train", "hidden") => {
                t.hidden_dim = match v.trim() {
                    "auto" => None,
                    _ => Some(parse_num(s, k, v, "an unsigned integer or `auto`")?),
                }
            }
            ("train", "leaky_slope") => t.leaky_slope = parse_num(s, k, v, float)?,
            ("train", "row_normalize") => t.row_normalize = parse_bool(s, k, v)?,
            ("train", "alpha") => t.alpha = AlphaSpec::Alpha(parse_num(s, k, v, float)?),
            ("train", "nu") => t.alpha = AlphaSpec::Nu(parse_num(s, k, v, float)?),
            ("train", "beta") => t.beta = parse_num(s, k, v, float)?,
            ("train", "gamma") => {
                t.gamma = parse_num(s, k, v, float)?;
                t.gamma_grid.clear();
            }
            ("train", "gamma_grid") => t.gamma_grid = parse_list(s, k, v, "a comma-separated list of numbers")?,
            ("train", "t_outer") => t.outer_iters = parse_num(s, k, v, uint)?,
            ("train", "pretrain_epochs") => t.pretrain_epochs = parse_num(s, k, v, uint)?,
            ("train", "epochs_per_iter") => t.epochs_per_iter = parse_num(s, k, v, uint)?,
            ("train", "s_comm") => t.s_comm = parse_sample(s, k, v)?,
            ("train", "s_nbr") => t.s_nbr = parse_sample(s, k, v)?,
            ("train", "lr") => t.learning_rate = parse_num(s, k, v, float)?,
            ("train", "seed_model") => t.seed_model = parse_num(s, k, v, uint)?,
            ("train", "seed_kmeans") => t.seed_kmeans = parse_num(s, k, v, uint)?,
            ("train", "seed_sampling") => t.seed_sampling = parse_num(s, k, v, uint)?,
            ("train", "qp_tol") => t.qp.tol = parse_num(s, k, v, float)?,
            ("train", "qp_max_iter_per_member") => t.qp.max_iter_per_member = parse_num(s, k, v, uint)?,
            ("train", "boundary_tol") => t.boundary_tol = parse_num(s, k, v, float)?,
            ("train", "rel_tol") => t.rel_tol = parse_num(s, k, v, float)?,
            ("train", "final_refresh_rounds") => t.final_refresh_rounds = parse_num(s, k, v, uint)?,
            ("eval", "train_frac_list") => self.eval.train_fractions = parse_list(s, k, v, "a comma-separated list of numbers")?,
            ("eval", "recall_l_list") => self.eval.recall_levels = parse_list(s, k, v, "a comma-separated list of numbers")?,
            ("eval", "seed") => self.eval.seed = parse_num(s, k, v, uint)?,
            _ => {
                return Err(DmgdError::InvalidConfig(format!(
                    "unknown key `{s}.{k}`; valid keys: {}",
                    valid_keys()
                )))
            }
        }
        Ok(())
    }

    /// Applies an INI-style text: `[section]` headers, `key = value` lines,
    /// `#` or `;` comments.
    pub fn apply_ini(&mut self, text: &str, origin: &Path) -> Result<()> {
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let parse_err = |message: String| DmgdError::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message,
            };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(parse_err(format!(
                        "unknown section [{name}]; valid sections: {}",
                        KEYS.iter().map(|(s, _)| *s).collect::<Vec<_>>().join(", ")
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `key = value`".into()))?;
            let section = section
                .as_deref()
                .ok_or_else(|| parse_err(format!("key `{}` appears before any [section]", key.trim())))?;
            self.set(section, key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Defaults, then the `--config` file, then explicit flags.
    pub fn from_flags(command: CommandName, flags: &Flags) -> Result<Self> {
        let mut cfg = RunConfig::new(command);
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path).map_err(|e| DmgdError::io(path, e))?;
            cfg.apply_ini(&text, path)?;
        }
        for (section, key, value) in flags.assignments() {
            cfg.set(section, key, value)?;
        }
        Ok(cfg)
    }

    /// The resolved settings in the same format `apply_ini` reads.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        s.push_str("[paths]\n");
        for (k, v) in [
            ("graph", path(&self.paths.graph)),
            ("labels", path(&self.paths.labels)),
            ("flags", path(&self.paths.flags)),
            ("out", path(&self.paths.out)),
            ("checkpoint", path(&self.paths.checkpoint)),
        ] {
            if let Some(v) = v {
                writeln!(s, "{k} = {v}").unwrap();
            }
        }
        let sy = &self.synth;
        writeln!(s, "\n[synth]\nsizes = {}\np_intra = {}\np_inter = {}\nseed = {}", join(&sy.community_sizes), sy.p_intra, sy.p_inter, sy.rng_seed).unwrap();
        let se = &self.seeding;
        writeln!(s, "\n[seeding]\noutlier_fraction = {}\nfar_quantile = {}\nseed = {}", se.outlier_fraction, se.far_quantile, se.rng_seed).unwrap();
        let t = &self.train;
        let sample = |v: Option<usize>| v.map_or("all".to_string(), |n| n.to_string());
        s.push_str("\n[train]\n");
        writeln!(s, "k = {}", t.k).unwrap();
        writeln!(s, "m = {}", t.embedding_dim).unwrap();
        writeln!(s, "hidden = {}", t.hidden_dim.map_or("auto".to_string(), |h| h.to_string())).unwrap();
        writeln!(s, "leaky_slope = {}", t.leaky_slope).unwrap();
        writeln!(s, "row_normalize = {}", t.row_normalize).unwrap();
        match t.alpha {
            AlphaSpec::Alpha(a) => writeln!(s, "alpha = {a}").unwrap(),
            AlphaSpec::Nu(nu) => writeln!(s, "nu = {nu}").unwrap(),
        }
        writeln!(s, "beta = {}", t.beta).unwrap();
        writeln!(s, "gamma = {}", t.gamma).unwrap();
        writeln!(s, "gamma_grid = {}", join(&t.gamma_grid)).unwrap();
        writeln!(s, "t_outer = {}", t.outer_iters).unwrap();
        writeln!(s, "pretrain_epochs = {}", t.pretrain_epochs).unwrap();
        writeln!(s, "epochs_per_iter = {}", t.epochs_per_iter).unwrap();
        writeln!(s, "s_comm = {}", sample(t.s_comm)).unwrap();
        writeln!(s, "s_nbr = {}", sample(t.s_nbr)).unwrap();
        writeln!(s, "lr = {}", t.learning_rate).unwrap();
        writeln!(s, "seed_model = {}", t.seed_model).unwrap();
        writeln!(s, "seed_kmeans = {}", t.seed_kmeans).unwrap();
        writeln!(s, "seed_sampling = {}", t.seed_sampling).unwrap();
        writeln!(s, "qp_tol = {}", t.qp.tol).unwrap();
        writeln!(s, "qp_max_iter_per_member = {}", t.qp.max_iter_per_member).unwrap();
        writeln!(s, "boundary_tol = {}", t.boundary_tol).unwrap();
        writeln!(s, "rel_tol = {}", t.rel_tol).unwrap();
        writeln!(s, "final_refresh_rounds = {}", t.final_refresh_rounds).unwrap();
        let e = &self.eval;
        writeln!(s, "\n[eval]\ntrain_frac_list = {}\nrecall_l_list = {}\nseed = {}", join(&e.train_fractions), join(&e.recall_levels), e.seed).unwrap();
        s
    }

    fn required<'a>(&self, p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        p.as_deref().ok_or_else(|| {
            DmgdError::InvalidConfig(format!("the {:?} command requires --{flag}", self.command).to_lowercase())
        })
    }

    fn out_dir(&self) -> Result<&Path> {
        self.required(&self.paths.out, "out")
    }
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| DmgdError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| DmgdError::io(path, e))
}

fn load_graph(path: &Path) -> Result<Graph> {
    let loaded = load_edge_list(path)?;
    if loaded.duplicate_edges > 0 {
        log::info!("{}: collapsed {} duplicate edges", path.display(), loaded.duplicate_edges);
    }
    Ok(loaded.graph)
}

fn write_graph_and_truth(dir: &Path, g: &Graph, truth: &GroundTruth, with_flags: bool) -> Result<()> {
    g.write_edge_list(&dir.join("graph.txt"))?;
    truth.write_labels(&dir.join("labels.txt"))?;
    if with_flags {
        truth.write_flags(&dir.join("outliers.txt"))?;
    }
    Ok(())
}

fn run_generate(cfg: &RunConfig, dir: &Path) -> Result<(Graph, GroundTruth)> {
    let (g, truth) = generate_planted_partition(&cfg.synth)?;
    write_graph_and_truth(dir, &g, &truth, false)?;
    log::info!("generated {} nodes, {} edges", g.n_nodes(), g.n_edges());
    Ok((g, truth))
}

fn run_seed(cfg: &RunConfig, g: &Graph, truth: &GroundTruth, dir: &Path) -> Result<(Graph, GroundTruth)> {
    let seeded = seed_outliers(g, truth, &cfg.seeding)?;
    write_graph_and_truth(dir, &seeded.graph, &seeded.truth, true)?;
    log::info!("seeded {} outliers", seeded.perturbed.len());
    Ok((seeded.graph, seeded.truth))
}

fn run_eval(cfg: &RunConfig, checkpoint: &Path, truth: &GroundTruth, dir: &Path) -> Result<()> {
    let embeddings = load_embeddings_csv(&checkpoint.join("embeddings.csv"))?;
    let mut spheres = SphereState::load(&checkpoint.join("spheres.txt"))?;
    spheres.refresh_slacks(&embeddings, cfg.train.boundary_tol);
    let report = evaluate_all(&embeddings, &spheres, truth, &cfg.eval)?;
    report.write(&dir.join("metrics.txt"), &dir.join("metrics.csv"))
}

/// Executes one resolved command.
pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.command {
        CommandName::Generate => {
            let dir = cfg.out_dir()?;
            create_dir(dir)?;
            run_generate(cfg, dir)?;
            write_text(&dir.join("config.ini"), &cfg.to_ini())
        }
        CommandName::Seed => {
            let graph = cfg.required(&cfg.paths.graph, "graph")?;
            let labels = cfg.required(&cfg.paths.labels, "labels")?;
            let dir = cfg.out_dir()?;
            let g = load_graph(graph)?;
            let truth = GroundTruth::load(labels, cfg.paths.flags.as_deref(), g.n_nodes())?;
            create_dir(dir)?;
            run_seed(cfg, &g, &truth, dir)?;
            write_text(&dir.join("config.ini"), &cfg.to_ini())
        }
        CommandName::Train => {
            let graph = cfg.required(&cfg.paths.graph, "graph")?;
            let dir = cfg.out_dir()?;
            let g = load_graph(graph)?;
            let artifacts = train(&g, &cfg.train)?;
            artifacts.write_checkpoint(dir)?;
            write_text(&dir.join("config.ini"), &cfg.to_ini())
        }
        CommandName::Eval => {
            let checkpoint = cfg.required(&cfg.paths.checkpoint, "checkpoint")?;
            let labels = cfg.required(&cfg.paths.labels, "labels")?;
            let dir = cfg.paths.out.as_deref().unwrap_or(checkpoint);
            let n = load_embeddings_csv(&checkpoint.join("embeddings.csv"))?.nrows();
            let truth = GroundTruth::load(labels, cfg.paths.flags.as_deref(), n)?;
            create_dir(dir)?;
            run_eval(cfg, checkpoint, &truth, dir)?;
            write_text(&dir.join("eval_config.ini"), &cfg.to_ini())
        }
        CommandName::Pipeline => {
            let dir = cfg.out_dir()?;
            create_dir(dir)?;
            let (g, truth) = run_generate(cfg, dir)?;
            let (g, truth) = if cfg.seeding.outlier_fraction > 0.0 {
                run_seed(cfg, &g, &truth, dir)?
            } else {
                (g, truth)
            };
            let checkpoint = dir.join("checkpoint");
            train(&g, &cfg.train)?.write_checkpoint(&checkpoint)?;
            run_eval(cfg, &checkpoint, &truth, dir)?;
            write_text(&dir.join("config.ini"), &cfg.to_ini())
        }
    }
}

/// Parses process arguments into a resolved config.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| DmgdError::InvalidConfig(e.to_string()))?;
    let (command, flags) = cli.command.split();
    RunConfig::from_flags(command, &flags)
}
