use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crt_core::growth::{
    alpha_gamma, branch_point_replace, discrete_two_colour, grow_ford, grow_stable_mass, grow_two_colour, marchal,
    recursive_construction, shape_prob_oracle, stable_mass_state, GrowthState, OracleModel, TRAJECTORY_HEADER,
};
use crt_core::rtree::{export as export_tree, import as import_tree, Format};
use crt_core::scalar::{parse_rational, parse_real, Exact};
use crt_core::stats::{
    calibration, verify_discrete_scaling, verify_duality, verify_ford_embedding, verify_gem_fragments, verify_metrics,
    verify_ml_sampler, verify_theorem_1_1, verify_two_colour_structure, Bundle,
};
use crt_core::{fmt17, replicate, DiscreteTree, Rational};

use crate::{
    BundleName, CliError, ExportArgs, Model, OracleArgs, OracleModelName, OutputFormat, Params, SimulateArgs,
    TreeFormat, VerifyArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn required<'a>(value: &'a Option<String>, flag: &str) -> Result<&'a str> {
    value.as_deref().ok_or_else(|| CliError::Usage(format!("--{flag} is required for this model")))
}

fn real(value: &Option<String>, flag: &str) -> Result<f64> {
    Ok(parse_real(required(value, flag)?)?)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.into(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.into(), source })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn tree_row(step: usize, tree: &DiscreteTree) -> String {
    let lengths: Vec<String> = (1..=tree.component_count()).map(|c| fmt17(tree.component_length(c))).collect();
    format!("{step},{},{},{}", fmt17(tree.total_length()), tree.component_count(), lengths.join(";"))
}

/// One replicate: trajectory rows and the final tree.
struct Run {
    rows: Vec<String>,
    tree: DiscreteTree,
}

fn from_states(states: Vec<GrowthState>) -> Run {
    let rows = states.iter().map(GrowthState::trajectory_row).collect();
    Run { rows, tree: states.into_iter().last().expect("state 0").tree }
}

fn from_trees(trees: Vec<DiscreteTree>, first: usize) -> Run {
    let rows = trees.iter().enumerate().map(|(i, t)| tree_row(first + i, t)).collect();
    Run { rows, tree: trees.into_iter().last().expect("nonempty trajectory") }
}

fn model_name(model: Model) -> &'static str {
    match model {
        Model::TwoColour => "two_colour",
        Model::StableMass => "stable_mass",
        Model::Ford => "ford",
        Model::Marchal => "marchal",
        Model::AlphaGamma => "alpha_gamma",
        Model::DiscreteTwoColour => "discrete_two_colour",
        Model::Recursive => "recursive",
        Model::BranchReplace => "branch_replace",
    }
}

fn check_params(model: Model, p: &Params) -> Result<()> {
    let need: &[&str] = match model {
        Model::Ford => &["beta-prime"],
        Model::AlphaGamma => &["alpha", "gamma"],
        _ => &["beta"],
    };
    for flag in need {
        let v = match *flag {
            "beta" => &p.beta,
            "beta-prime" => &p.beta_prime,
            "alpha" => &p.alpha,
            _ => &p.gamma,
        };
        required(v, flag)?;
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    check_params(a.model, &a.params)?;
    let p = &a.params;
    let steps = a.steps;
    let (depth, atoms, sticks) = (a.depth, a.atoms, a.sticks);
    let model = a.model;
    let beta = || real(&p.beta, "beta");
    let (b, bp, al, ga) = match model {
        Model::Ford => (0.0, real(&p.beta_prime, "beta-prime")?, 0.0, 0.0),
        Model::AlphaGamma => (0.0, 0.0, real(&p.alpha, "alpha")?, real(&p.gamma, "gamma")?),
        _ => (beta()?, 0.0, 0.0, 0.0),
    };
    let runs = replicate(a.seed, a.replicates, |rng| {
        Ok(match model {
            Model::TwoColour => from_states(grow_two_colour(b, steps, rng)?),
            Model::StableMass => from_states(grow_stable_mass(b, steps, rng)?),
            Model::Ford => from_trees(grow_ford(bp, steps.max(1), rng)?, 1),
            Model::Marchal => from_trees(marchal(b, steps, rng)?, 0),
            Model::AlphaGamma => from_trees(alpha_gamma(al, ga, steps.max(1), rng)?, 1),
            Model::DiscreteTwoColour => from_trees(discrete_two_colour(b, steps, rng)?, 0),
            Model::Recursive => {
                let r = recursive_construction(b, depth, atoms, rng)?;
                let rows = r
                    .level_masses
                    .iter()
                    .zip(&r.level_lengths)
                    .enumerate()
                    .map(|(l, (m, len))| format!("{l},{},{}", fmt17(*m), fmt17(*len)))
                    .collect();
                Run { rows, tree: r.tree }
            }
            Model::BranchReplace => {
                let state = stable_mass_state(b, steps, rng)?;
                let tree = branch_point_replace(&state, sticks, rng)?.tree;
                Run { rows: vec![tree_row(steps, &tree)], tree }
            }
        })
    })?;

    let name = model_name(model);
    let header = if model == Model::Recursive { "level,mass,length" } else { TRAJECTORY_HEADER };
    let mut csv = format!("replicate,{header}\n");
    for (i, run) in runs.iter().enumerate() {
        for row in &run.rows {
            let _ = writeln!(csv, "{i},{row}");
        }
    }
    write(&a.out.out.join(format!("{name}_trajectory.csv")), csv.as_bytes())?;
    let format = match a.format {
        OutputFormat::Csv => return Ok(()),
        OutputFormat::Json => Format::Json,
        OutputFormat::Newick => Format::Newick,
    };
    let ext = if format == Format::Json { "json" } else { "nwk" };
    for (i, run) in runs.iter().enumerate() {
        write(&a.out.out.join(format!("{name}_r{i}.{ext}")), &export_tree(&run.tree, format)?)?;
    }
    Ok(())
}

fn bundle_file(name: BundleName) -> &'static str {
    match name {
        BundleName::Theorem11 => "theorem-1-1",
        BundleName::FordEmbedding => "ford-embedding",
        BundleName::GemFragments => "gem-fragments",
        BundleName::MlSampler => "ml-sampler",
        BundleName::TwoColourStructure => "two-colour-structure",
        BundleName::DiscreteScaling => "discrete-scaling",
        BundleName::Metrics => "metrics",
        BundleName::Duality => "duality",
        BundleName::Calibration => "calibration",
    }
}

pub fn verify(a: &VerifyArgs) -> Result<bool> {
    let beta = parse_real(&a.beta)?;
    let path = a.out.out.join(format!("verify_{}.json", bundle_file(a.bundle)));
    let n = a.replicates;
    let bundle: Bundle = match a.bundle {
        BundleName::Theorem11 => verify_theorem_1_1(beta, a.steps.unwrap_or(3), n, a.seed)?,
        BundleName::FordEmbedding => verify_ford_embedding(beta, n, a.m_max, a.seed)?,
        BundleName::GemFragments => verify_gem_fragments(beta, &[1, a.steps.unwrap_or(5)], n, a.seed)?,
        BundleName::MlSampler => verify_ml_sampler(n, a.seed)?,
        BundleName::TwoColourStructure => {
            verify_two_colour_structure(beta, a.steps.unwrap_or(10), (n / 50).max(100), n, a.seed)?
        }
        BundleName::DiscreteScaling => verify_discrete_scaling(beta, a.steps.unwrap_or(10_000), n, a.seed)?,
        BundleName::Metrics => verify_metrics(n, a.seed)?,
        BundleName::Duality => {
            let bp = parse_rational(&a.beta)?;
            let bp = bp.clone() / (Rational::from_ratio(1, 1) - bp);
            verify_duality(a.steps.unwrap_or(8), &[bp])?
        }
        BundleName::Calibration => {
            let results = calibration(a.seed, n, a.steps.unwrap_or(2_000))?;
            let json = serde_json::to_vec_pretty(&results).map_err(|e| CliError::Usage(e.to_string()))?;
            for r in &results {
                println!("{:<4} {:<24} {}/{}", if r.pass { "ok" } else { "FAIL" }, r.test, r.passes, r.seeds);
            }
            write(&path, &json)?;
            return Ok(results.iter().all(|r| r.pass));
        }
    };
    print!("{}", bundle.summary_table());
    let json = serde_json::to_vec_pretty(&bundle.reports).map_err(|e| CliError::Usage(e.to_string()))?;
    write(&path, &json)?;
    Ok(bundle.pass)
}

fn tree_format(f: TreeFormat) -> Format {
    match f {
        TreeFormat::Json => Format::Json,
        TreeFormat::Newick => Format::Newick,
    }
}

pub fn export(a: &ExportArgs) -> Result<()> {
    let bytes = fs::read(&a.input).map_err(|source| CliError::Read { path: a.input.clone(), source })?;
    let tree = import_tree(&bytes, tree_format(a.from))?;
    let out = export_tree(&tree, tree_format(a.to))?;
    match &a.output {
        Some(path) => write(path, &out),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(&out).and_then(|()| stdout.write_all(b"\n")) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Write { path: "<stdout>".into(), source: e })
                }
                _ => Ok(()),
            }
        }
    }
}

pub fn oracle(a: &OracleArgs) -> Result<()> {
    let p = &a.params;
    let rational = |v: &Option<String>, flag: &str| -> Result<Rational> { Ok(parse_rational(required(v, flag)?)?) };
    let (model, tag) = match a.model {
        OracleModelName::Marchal => (OracleModel::Marchal { beta: rational(&p.beta, "beta")? }, "marchal"),
        OracleModelName::TwoColour => (OracleModel::TwoColour { beta: rational(&p.beta, "beta")? }, "two_colour"),
        OracleModelName::AlphaGamma => (
            OracleModel::AlphaGamma { alpha: rational(&p.alpha, "alpha")?, gamma: rational(&p.gamma, "gamma")? },
            "alpha_gamma",
        ),
    };
    let probs = shape_prob_oracle(&model, a.n, !a.unlabeled)?;
    let mut csv = String::from("shape,probability,probability_f64\n");
    let mut total = Rational::from_ratio(0, 1);
    for (key, prob) in &probs {
        let _ = writeln!(csv, "\"{key}\",{prob},{}", fmt17(prob.to_f64()));
        total += prob;
    }
    println!("{} shapes, total probability {total}", probs.len());
    let file: PathBuf = a.out.out.join(format!("oracle_{tag}_n{}.csv", a.n));
    write(&file, csv.as_bytes())
}
