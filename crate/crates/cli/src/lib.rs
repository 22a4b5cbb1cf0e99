//! Command-line front end. [`run`] parses arguments, executes one command
//! and returns the process exit code: 0 on success, 1 for usage and input
//! errors, 2 when a numerical procedure fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use dirtree::composition::{sample_correlation, Composition, CompositionDataset};
use dirtree::dirichlet::{self, DirichletParams};
use dirtree::hypothesis::{self, MeanModel};
use dirtree::io::report::{FittedModel, TreeRankEntry};
use dirtree::io::svg::{ternary_grid_svg, ternary_svg};
use dirtree::io::{parse_tree, read_csv, render_tree, AnalysisConfig, CsvOptions, ResultDocument};
use dirtree::nested::{self, NddParams, NestingTree};
use dirtree::numerics::Tolerance;
use dirtree::sim::{self, Generator, Procedure, SimSpec};
use dirtree::tree_search::{enumerate_trees, filter_impossible, select_tree, SelectionCriterion, TreeCandidate};
use dirtree::Error;

#[derive(Debug, Parser)]
#[command(name = "dirtree", version, about = "Dirichlet and nested Dirichlet inference for compositional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a Dirichlet or nested Dirichlet model to each group.
    Fit(FitArgs),
    /// Run a hypothesis test.
    Test(TestArgs),
    /// Bonferroni intervals for differences of group mean vectors.
    Ci(CiArgs),
    /// Enumerate, filter and rank nesting trees.
    TreeSearch(TreeSearchArgs),
    /// Monte Carlo studies.
    Simulate(SimulateArgs),
    /// Ternary diagrams as SVG.
    Ternary(TernaryArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// CSV file, one composition per row.
    input: PathBuf,
    /// Column holding group labels (default: `group` if present).
    #[arg(long)]
    group_column: Option<String>,
    /// Component columns, comma separated (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    components: Option<Vec<String>>,
    /// Groups to keep, in this order.
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<String>>,
    /// Replace exact zeros by this value before closure.
    #[arg(long)]
    zero_replace: Option<f64>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Record the run time in the document.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Dirichlet,
    Ndd,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = ModelArg::Dirichlet)]
    model: ModelArg,
    /// Nesting tree: literal text, `@file`, or `search`.
    #[arg(long)]
    tree: Option<String>,
    /// Fit all groups together.
    #[arg(long)]
    pooled: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    DirichletLrt,
    NddLrt,
    ClrHotelling,
    Uniformity,
    Maugard,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Nesting tree for ndd-lrt: literal text, `@file`, or `search`.
    #[arg(long)]
    tree: Option<String>,
    /// Test size.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CiArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = ModelArg::Dirichlet)]
    model: ModelArg,
    #[arg(long)]
    tree: Option<String>,
    /// Overall confidence level before the Bonferroni split.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Loglik,
    Aic,
}

#[derive(Debug, Args)]
struct TreeSearchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = CriterionArg::Loglik)]
    criterion: CriterionArg,
    /// Keep trees whose nesting contradicts the correlation signs.
    #[arg(long)]
    no_filter: bool,
    /// Correlate within groups (each group centred) instead of pooling raw.
    #[arg(long)]
    within_groups: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyArg {
    Type1,
    Power,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProcedureArg {
    Maugard,
    DirichletLrt,
    NddLrt,
    ClrHotelling,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    study: StudyArg,
    #[arg(long, value_enum, default_value_t = ProcedureArg::DirichletLrt)]
    procedure: ProcedureArg,
    /// Dirichlet parameters of the (first) generator.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Dirichlet parameters of the second generator (power studies).
    #[arg(long, value_delimiter = ',')]
    alpha2: Option<Vec<f64>>,
    /// Nested Dirichlet generator: annotated tree text or `@file`.
    #[arg(long)]
    ndd: Option<String>,
    /// Second nested Dirichlet generator (power studies).
    #[arg(long)]
    ndd2: Option<String>,
    /// Test tree for the ndd-lrt procedure.
    #[arg(long)]
    tree: Option<String>,
    /// Component names used by tree text (default X1..XK).
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    /// Observations per group, or draws for a correlation check.
    #[arg(long, default_value_t = 7)]
    n: usize,
    #[arg(long, default_value_t = sim::DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Test size.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Include wall time in the document.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TernaryArgs {
    #[command(flatten)]
    input: InputArgs,
    /// The two plotted components; the rest are summed.
    #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "all_pairs")]
    axes: Option<Vec<String>>,
    /// One panel per pair of components.
    #[arg(long)]
    all_pairs: bool,
    /// SVG destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI with process stdio.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let _ = writeln!(err, "  caused by: {s}");
                source = s.source();
            }
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    match cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Test(a) => cmd_test(a, out),
        Command::Ci(a) => cmd_ci(a, out),
        Command::TreeSearch(a) => cmd_tree_search(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Ternary(a) => cmd_ternary(a, out),
    }
}

fn load(input: &InputArgs) -> Result<CompositionDataset, Error> {
    let options = CsvOptions {
        group_column: input.group_column.clone(),
        components: input.components.clone(),
        groups: input.groups.clone(),
        zero_replace: input.zero_replace,
    };
    read_csv(&input.input, &options).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", input.input.display()),
        )),
        other => other,
    })
}

fn config(command: &str, input: Option<&InputArgs>) -> AnalysisConfig {
    let mut c = AnalysisConfig {
        command: command.into(),
        ..Default::default()
    };
    if let Some(i) = input {
        c.input = Some(i.input.display().to_string());
        c.group_column = i.group_column.clone();
        c.components = i.components.clone().unwrap_or_default();
        c.zero_replace = i.zero_replace;
    }
    c
}

fn emit(mut doc: ResultDocument, output: &OutputArgs, out: &mut dyn Write) -> Result<(), Error> {
    if output.timestamp {
        doc.timestamp = Some(
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        );
    }
    let text = match output.format {
        Format::Json => doc.to_json()?,
        Format::Text => doc.to_text(),
    };
    match &output.out {
        Some(path) => fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn tree_text(spec: &str) -> Result<String, Error> {
    match spec.strip_prefix('@') {
        Some(path) => Ok(fs::read_to_string(path)?.trim().to_string()),
        None => Ok(spec.to_string()),
    }
}

/// Resolves `--tree`: literal text, `@file`, or `search` (best tree on the
/// pooled data).
fn resolve_tree(spec: Option<&str>, ds: &CompositionDataset, tol: &Tolerance) -> Result<NestingTree, Error> {
    let spec = spec.ok_or_else(|| Error::InvalidParameter("the nested model needs --tree".into()))?;
    if spec == "search" {
        let candidates = enumerate_trees(ds.n_components())?;
        let corr = sample_correlation(ds, true)?;
        let filtered = filter_impossible(candidates, &corr)?;
        let sel = select_tree(&ds.pooled(), &filtered, SelectionCriterion::LogLikelihood, tol)?;
        return Ok(sel.best.params.tree().topology());
    }
    Ok(parse_tree(&tree_text(spec)?, ds.component_names())?.topology())
}

fn fit_group(
    label: &str,
    obs: &[Composition],
    model: ModelArg,
    tree: Option<&NestingTree>,
    names: &[String],
    tol: &Tolerance,
) -> Result<FittedModel, Error> {
    let n = obs.len();
    let tagged = |e: Error| Error::Subtree {
        node: format!("group {label}"),
        source: Box::new(e),
    };
    match model {
        ModelArg::Dirichlet => {
            let fit = dirichlet::mle(obs, tol).map_err(tagged)?;
            Ok(FittedModel {
                group: label.into(),
                model: "dirichlet".into(),
                tree: None,
                alpha: fit.params.alpha().to_vec(),
                means: fit.params.mean(),
                standard_errors: dirichlet::mean_standard_errors(&fit.params, n).map_err(tagged)?,
                log_likelihood: fit.log_likelihood,
                n,
            })
        }
        ModelArg::Ndd => {
            let tree = tree.expect("tree resolved for the nested model");
            let fit = nested::mle(tree, obs, tol).map_err(tagged)?;
            Ok(FittedModel {
                group: label.into(),
                model: "ndd".into(),
                tree: Some(render_tree(fit.params.tree(), names)),
                alpha: Vec::new(),
                means: fit.params.leaf_means(),
                standard_errors: fit.params.delta_method_ses(n).map_err(tagged)?,
                log_likelihood: fit.log_likelihood,
                n,
            })
        }
    }
}

fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Dirichlet => "dirichlet",
        ModelArg::Ndd => "ndd",
    }
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write) -> Result<(), Error> {
    let ds = load(&a.input)?;
    let tol = Tolerance::default();
    let tree = match a.model {
        ModelArg::Ndd => Some(resolve_tree(a.tree.as_deref(), &ds, &tol)?),
        ModelArg::Dirichlet => None,
    };
    let names = ds.component_names();
    let mut doc = ResultDocument::new(AnalysisConfig {
        model: Some(model_name(a.model).into()),
        tree: tree.as_ref().map(|t| render_tree(t, names)),
        ..config("fit", Some(&a.input))
    });
    doc.component_names = names.to_vec();
    if a.pooled {
        doc.fits.push(fit_group("pooled", &ds.pooled(), a.model, tree.as_ref(), names, &tol)?);
    } else {
        for g in ds.groups() {
            doc.fits.push(fit_group(&g.label, &g.observations, a.model, tree.as_ref(), names, &tol)?);
        }
    }
    emit(doc, &a.output, out)
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::DirichletLrt => "dirichlet-lrt",
        MethodArg::NddLrt => "ndd-lrt",
        MethodArg::ClrHotelling => "clr-hotelling",
        MethodArg::Uniformity => "uniformity",
        MethodArg::Maugard => "maugard",
    }
}

fn check_level(level: f64) -> Result<(), Error> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("--level must lie in (0, 1), got {level}")))
    }
}

fn cmd_test(a: TestArgs, out: &mut dyn Write) -> Result<(), Error> {
    check_level(a.level)?;
    let ds = load(&a.input)?;
    let tol = Tolerance::default();
    let names = ds.component_names();
    let mut cfg = AnalysisConfig {
        method: Some(method_name(a.method).into()),
        level: Some(a.level),
        ..config("test", Some(&a.input))
    };
    let mut doc_tests = Vec::new();
    let mut verdict = None;
    match a.method {
        MethodArg::DirichletLrt => doc_tests.push(hypothesis::two_sample_dirichlet_lrt(&ds, &tol)?),
        MethodArg::NddLrt => {
            let tree = resolve_tree(a.tree.as_deref(), &ds, &tol)?;
            cfg.tree = Some(render_tree(&tree, names));
            doc_tests.push(hypothesis::two_sample_ndd_lrt(&ds, &tree, &tol)?);
        }
        MethodArg::ClrHotelling => doc_tests.push(hypothesis::clr_hotelling_test(&ds)?),
        MethodArg::Uniformity => {
            for g in ds.groups() {
                doc_tests.push(hypothesis::one_sample_uniformity_test(g, &tol)?);
            }
        }
        MethodArg::Maugard => {
            let o = hypothesis::maugard_procedure(&ds, a.level, &tol)?;
            verdict = Some(o.verdict);
            doc_tests.extend(o.reports);
        }
    }
    let mut doc = ResultDocument::new(cfg);
    doc.component_names = names.to_vec();
    doc.tests = doc_tests;
    doc.verdict = verdict;
    emit(doc, &a.output, out)
}

fn cmd_ci(a: CiArgs, out: &mut dyn Write) -> Result<(), Error> {
    check_level(a.level)?;
    let ds = load(&a.input)?;
    let tol = Tolerance::default();
    let names = ds.component_names();
    let (model, tree_text) = match a.model {
        ModelArg::Dirichlet => (MeanModel::Dirichlet, None),
        ModelArg::Ndd => {
            let t = resolve_tree(a.tree.as_deref(), &ds, &tol)?;
            let text = render_tree(&t, names);
            (MeanModel::Ndd(t), Some(text))
        }
    };
    let mut doc = ResultDocument::new(AnalysisConfig {
        model: Some(model_name(a.model).into()),
        tree: tree_text,
        level: Some(a.level),
        ..config("ci", Some(&a.input))
    });
    doc.component_names = names.to_vec();
    doc.intervals = hypothesis::pairwise_mean_cis(&ds, &model, a.level, &tol)?;
    emit(doc, &a.output, out)
}

fn cmd_tree_search(a: TreeSearchArgs, out: &mut dyn Write) -> Result<(), Error> {
    let ds = load(&a.input)?;
    let tol = Tolerance::default();
    let names = ds.component_names().to_vec();
    let corr = sample_correlation(&ds, !a.within_groups)?;
    let mut candidates: Vec<TreeCandidate> = enumerate_trees(ds.n_components())?;
    if !a.no_filter {
        candidates = filter_impossible(candidates, &corr)?;
    }
    let criterion = match a.criterion {
        CriterionArg::Loglik => SelectionCriterion::LogLikelihood,
        CriterionArg::Aic => SelectionCriterion::Aic,
    };
    let sel = select_tree(&ds.pooled(), &candidates, criterion, &tol)?;

    let mut doc = ResultDocument::new(AnalysisConfig {
        model: Some("ndd".into()),
        tree: Some(render_tree(sel.best.params.tree(), &names)),
        ..config("tree-search", Some(&a.input))
    });
    doc.component_names = names.clone();
    doc.correlation = Some(
        (0..corr.nrows())
            .map(|i| (0..corr.ncols()).map(|j| corr[(i, j)]).collect())
            .collect(),
    );
    let n = ds.total_observations();
    doc.fits.push(FittedModel {
        group: "pooled".into(),
        model: "ndd".into(),
        tree: Some(render_tree(sel.best.params.tree(), &names)),
        alpha: Vec::new(),
        means: sel.best.params.leaf_means(),
        standard_errors: sel.best.params.delta_method_ses(n)?,
        log_likelihood: sel.best.log_likelihood,
        n,
    });
    for r in &sel.ranking {
        doc.tree_ranking.push(TreeRankEntry {
            tree: render_tree(&r.tree, &names),
            log_likelihood: Some(r.log_likelihood),
            aic: Some(r.aic),
            n_parameters: r.n_parameters,
            filtered: None,
        });
    }
    for f in &sel.failures {
        doc.tree_ranking.push(TreeRankEntry {
            tree: render_tree(&f.tree, &names),
            log_likelihood: None,
            aic: None,
            n_parameters: f.tree.n_parameters(),
            filtered: None,
        });
        doc.notes.push(format!("fit failed for {}: {}", render_tree(&f.tree, &names), f.error));
    }
    for c in candidates.iter().filter(|c| c.filtered.is_some()) {
        let v = c.filtered.as_ref().unwrap();
        doc.tree_ranking.push(TreeRankEntry {
            tree: render_tree(&c.tree, &names),
            log_likelihood: None,
            aic: None,
            n_parameters: c.tree.n_parameters(),
            filtered: Some(format!(
                "{} and {} are nested together but corr({}, {}) = {:.3} and corr({}, {}) = {:.3} differ in sign",
                names[v.u], names[v.v], names[v.outside], names[v.u], v.corr_outside_u, names[v.outside], names[v.v], v.corr_outside_v
            )),
        });
    }
    emit(doc, &a.output, out)
}

fn sim_names(a: &SimulateArgs, k: Option<usize>) -> Vec<String> {
    match (&a.names, k) {
        (Some(n), _) => n.clone(),
        (None, Some(k)) => (1..=k).map(|j| format!("X{j}")).collect(),
        (None, None) => Vec::new(),
    }
}

fn generator(alpha: &Option<Vec<f64>>, ndd: &Option<String>, names: &[String], which: &str) -> Result<Option<Generator>, Error> {
    match (alpha, ndd) {
        (Some(_), Some(_)) => Err(Error::InvalidParameter(format!(
            "give either --alpha{which} or --ndd{which}, not both"
        ))),
        (Some(a), None) => Ok(Some(Generator::Dirichlet(DirichletParams::new(a.clone())?))),
        (None, Some(t)) => {
            let tree = parse_tree(&tree_text(t)?, names)?;
            Ok(Some(Generator::Ndd(NddParams::new(tree)?)))
        }
        (None, None) => Ok(None),
    }
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<(), Error> {
    let k = a.alpha.as_ref().map(Vec::len);
    let names = sim_names(&a, k);
    let first = generator(&a.alpha, &a.ndd, &names, "")?
        .ok_or_else(|| Error::InvalidParameter("give the generator with --alpha or --ndd".into()))?;
    let names = if names.is_empty() {
        sim_names(&a, Some(first.n_components()))
    } else {
        names
    };
    let mut cfg = AnalysisConfig {
        seed: Some(a.seed),
        level: Some(a.level),
        ..config(&format!("simulate {}", study_name(a.study)), None)
    };
    let mut doc;
    match a.study {
        StudyArg::Correlation => {
            let params = match first {
                Generator::Ndd(p) => p,
                Generator::Dirichlet(d) => NddParams::new(NestingTree::flat_with_alpha(d.alpha())?)?,
            };
            cfg.tree = Some(render_tree(params.tree(), &names));
            let corr = sim::run_correlation_check(&params, a.n, a.seed)?;
            doc = ResultDocument::new(cfg);
            doc.correlation = Some(
                (0..corr.nrows())
                    .map(|i| (0..corr.ncols()).map(|j| corr[(i, j)]).collect())
                    .collect(),
            );
        }
        StudyArg::Type1 | StudyArg::Power => {
            let procedure = match a.procedure {
                ProcedureArg::Maugard => Procedure::Maugard,
                ProcedureArg::DirichletLrt => Procedure::DirichletLrt,
                ProcedureArg::ClrHotelling => Procedure::ClrHotelling,
                ProcedureArg::NddLrt => {
                    let t = a
                        .tree
                        .as_deref()
                        .ok_or_else(|| Error::InvalidParameter("ndd-lrt needs --tree".into()))?;
                    let tree = parse_tree(&tree_text(t)?, &names)?.topology();
                    cfg.tree = Some(render_tree(&tree, &names));
                    Procedure::NddLrt(tree)
                }
            };
            cfg.method = Some(procedure_name(a.procedure).into());
            cfg.replicates = Some(a.replicates);
            let spec = if a.study == StudyArg::Type1 {
                if a.alpha2.is_some() || a.ndd2.is_some() {
                    return Err(Error::InvalidParameter(
                        "a Type I study uses one generator; drop --alpha2/--ndd2".into(),
                    ));
                }
                SimSpec::null(first, a.n, procedure)
            } else {
                let second = generator(&a.alpha2, &a.ndd2, &names, "2")?.ok_or_else(|| {
                    Error::InvalidParameter("a power study needs --alpha2 or --ndd2".into())
                })?;
                SimSpec::power(first, second, a.n, procedure)
            }
            .with_replicates(a.replicates)
            .with_seed(a.seed)
            .with_level(a.level);
            let mut result = if a.study == StudyArg::Type1 {
                sim::run_type1_study(&spec)?
            } else {
                sim::run_power_study(&spec)?
            };
            if !a.timing {
                result.wall_time_secs = None;
            }
            doc = ResultDocument::new(cfg);
            doc.simulation = Some(result);
        }
    }
    doc.component_names = names;
    emit(doc, &a.output, out)
}

fn study_name(s: StudyArg) -> &'static str {
    match s {
        StudyArg::Type1 => "type1",
        StudyArg::Power => "power",
        StudyArg::Correlation => "correlation",
    }
}

fn procedure_name(p: ProcedureArg) -> &'static str {
    match p {
        ProcedureArg::Maugard => "maugard",
        ProcedureArg::DirichletLrt => "dirichlet-lrt",
        ProcedureArg::NddLrt => "ndd-lrt",
        ProcedureArg::ClrHotelling => "clr-hotelling",
    }
}

fn cmd_ternary(a: TernaryArgs, out: &mut dyn Write) -> Result<(), Error> {
    let ds = load(&a.input)?;
    let svg = if a.all_pairs {
        ternary_grid_svg(&ds)?
    } else {
        let axes = match &a.axes {
            Some(v) if v.len() == 2 => {
                let idx = |name: &String| {
                    ds.component_index(name)
                        .ok_or_else(|| Error::MissingColumn(name.clone()))
                };
                (idx(&v[0])?, idx(&v[1])?)
            }
            Some(_) => {
                return Err(Error::InvalidParameter("--axes takes exactly two component names".into()))
            }
            None => (0, 1),
        };
        ternary_svg(&ds, axes)?
    };
    match &a.out {
        Some(path) => fs::write(path, svg)?,
        None => out.write_all(svg.as_bytes())?,
    }
    Ok(())
}
