use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::json::{load_operator, save_operator, write_json, DecompositionJson, ResultJson};
use crate::causal_subspaces::{validity_subspace, Scenario};
use crate::conic_solver::SolveStatus;
use crate::error::{Error, Result};
use crate::model_zoo::{gap_search, gap_search_on, GapReport, GapSearchConfig, NamedModel, SampleStatus};
use crate::operator_core::{ProcessOperator, C64};
use crate::robustness::{random_robustness, verify_witness, RobustnessOptions, Verdict};
use crate::sep_cones::{build_cone, dual_cone, membership, ConeChoice, ConeSpec, Membership};

/// Components below this relative norm are left out of decomposition files.
const COMPONENT_CUTOFF: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "causalcones", version, about = "Causal separability of process matrices: robustness, witnesses, decompositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Cone: auto, bipartite, tripartite, b1, b2, b4, b5, necessary, sufficient, fixed-order:A<B<C
    #[arg(long, global = true, default_value = "auto")]
    pub cone: String,
    /// Scenario as NAME:dI:dO entries (`A:1:2,B:2:2`) or qubit party names (`A,B,C`).
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// Solver tolerance (absolute and relative).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Anderson memory (0 disables acceleration).
    #[arg(long, global = true)]
    pub anderson: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// CSV is written in addition to the JSON artifact.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Operator JSON file.
    #[arg(long, conflicts_with = "example")]
    pub input: Option<PathBuf>,
    /// Named example (see `examples list`).
    #[arg(long)]
    pub example: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check positivity, normalization and validity.
    Validate(Source),
    /// Random robustness with witness and decomposition.
    Robustness(Source),
    /// Optimal witness, written as an operator file.
    Witness {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a witness lies in the dual of the selected cone.
    VerifyWitness {
        #[arg(long)]
        witness: PathBuf,
        /// Optional process to evaluate the witness on.
        #[command(flatten)]
        source: Source,
    },
    /// Membership test: a decomposition if inside the cone, a witness otherwise.
    Decompose(Source),
    /// `Tr[S·W]` of a witness on a process.
    Evaluate {
        #[arg(long)]
        witness: PathBuf,
        #[command(flatten)]
        source: Source,
    },
    /// Named operators.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
    /// Compare necessary and sufficient bounds on random processes.
    SampleSearch {
        /// Symmetrize samples over these parties (`B,C,D`).
        #[arg(long)]
        symmetric: Option<String>,
        /// Extra operator files evaluated alongside the samples.
        #[arg(long)]
        inject: Vec<PathBuf>,
        /// Gap above which a sample is flagged.
        #[arg(long, default_value_t = 1e-4)]
        flag: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExamplesAction {
    List,
    Build {
        id: String,
        #[arg(long)]
        out: PathBuf,
        /// Switch target state as `re0,im0,re1,im1`.
        #[arg(long)]
        psi: Option<String>,
    },
}

/// How a command ended when it did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Definitive,
    Undecided,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Definitive => 0,
            Outcome::Undecided => 2,
        }
    }
}

/// Parses `A:1:2,B:2:2`, `A:2` (equal in/out) or bare names (qubits).
pub fn parse_scenario(spec: &str) -> Result<Scenario> {
    let bad = |m: String| Error::BadParams(format!("scenario '{spec}': {m}"));
    let mut parties: Vec<(String, usize, usize)> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f: Vec<&str> = item.split(':').collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("'{s}' is not a dimension")));
        let (di, dout) = match f.len() {
            1 => (2, 2),
            2 => (num(f[1])?, num(f[1])?),
            3 => (num(f[1])?, num(f[2])?),
            _ => return Err(bad(format!("entry '{item}' has too many fields"))),
        };
        parties.push((f[0].to_string(), di, dout));
    }
    if parties.is_empty() {
        return Err(bad("no parties".into()));
    }
    let refs: Vec<(&str, usize, usize)> = parties.iter().map(|(n, a, b)| (n.as_str(), *a, *b)).collect();
    Scenario::new(&refs)
}

fn parse_psi(s: &str) -> Result<[C64; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::BadParams(format!("bad number '{x}' in --psi"))))
        .collect::<Result<_>>()?;
    if v.len() != 4 {
        return Err(Error::BadParams("--psi takes re0,im0,re1,im1".into()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::BadParams(format!("--psi has squared norm {norm}")));
    }
    Ok([C64::new(v[0], v[1]), C64::new(v[2], v[3])])
}

/// Caps the rayon pool at `CAUSALCONES_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CAUSALCONES_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::BadParams(format!("CAUSALCONES_THREADS='{v}'")))?;
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(())
}

struct Ctx<'a> {
    g: &'a GlobalOpts,
}

impl Ctx<'_> {
    fn options(&self) -> RobustnessOptions {
        let mut o = RobustnessOptions::default();
        if let Some(t) = self.g.tol {
            o.solver.eps_abs = t;
            o.solver.eps_rel = t;
        }
        if let Some(m) = self.g.max_iter {
            o.solver.max_iter = m;
        }
        if let Some(a) = self.g.anderson {
            o.solver.anderson = a;
        }
        o
    }

    fn path(&self, name: &str) -> PathBuf {
        self.g.out_dir.join(name)
    }

    fn declared(&self) -> Result<Option<Scenario>> {
        self.g.scenario.as_deref().map(parse_scenario).transpose()
    }

    fn operator(&self, src: &Source) -> Result<Option<ProcessOperator>> {
        let w = match (&src.input, &src.example) {
            (Some(p), _) => load_operator(p)?,
            (None, Some(id)) => NamedModel::parse(id)?.build(None)?,
            (None, None) => return Ok(None),
        };
        if let Some(scn) = self.declared()? {
            if scn.space() != w.space() {
                return Err(Error::SpaceMismatch(format!("input is on {}, scenario declares {}", w.space(), scn.space())));
            }
        }
        Ok(Some(w))
    }

    fn required(&self, src: &Source) -> Result<ProcessOperator> {
        self.operator(src)?.ok_or_else(|| Error::BadParams("pass --input FILE or --example ID".into()))
    }

    fn cone_for(&self, w: &ProcessOperator) -> Result<ConeSpec> {
        let choice: ConeChoice = self.g.cone.parse()?;
        build_cone(&choice, &Scenario::from_space(w.space().clone())?)
    }

    fn emit<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.path(&format!("{name}.json"));
        write_json(&path, value)?;
        if self.g.format == Format::Csv {
            write_csv(&self.path(&format!("{name}.csv")), std::slice::from_ref(value))?;
        }
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| Error::Io { path: path.display().to_string(), source: std::io::Error::other(e) };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    }
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.display().to_string(), source })
}

#[derive(Serialize)]
struct Validation {
    valid: bool,
    normalized: bool,
    trace: f64,
    expected_trace: f64,
    min_eigenvalue: f64,
    validity_residual: f64,
    dim: usize,
}

#[derive(Serialize)]
struct RobustnessRow {
    cone: String,
    r_star: f64,
    verdict: Verdict,
    status: SolveStatus,
    iterations: usize,
    witness_value: Option<f64>,
    duality_gap: Option<f64>,
}

#[derive(Serialize)]
struct WitnessRow {
    cone: String,
    t_star: f64,
    accepted: bool,
    status: SolveStatus,
    value_on_input: Option<f64>,
}

#[derive(Serialize)]
struct MembershipRow {
    cone: String,
    member: Option<bool>,
    components: usize,
    r_star: Option<f64>,
}

#[derive(Serialize)]
struct EvaluationRow {
    value: f64,
    witness_trace_on_noise: f64,
}

#[derive(Serialize)]
struct GapRow {
    seed: u64,
    r_plus: f64,
    r_minus: f64,
    gap: f64,
    status: SampleStatus,
}

/// Writes the gap search CSV (seed, r_plus, r_minus, gap, status), the full
/// JSON report, and one operator file per flagged or failed sample.
pub fn write_gap_report(dir: &Path, report: &GapReport) -> Result<Vec<PathBuf>> {
    let rows: Vec<GapRow> = report
        .samples
        .iter()
        .map(|s| GapRow { seed: s.seed, r_plus: s.r_plus, r_minus: s.r_minus, gap: s.gap, status: s.status })
        .collect();
    write_csv(&dir.join("gap_search.csv"), &rows)?;
    write_json(&dir.join("gap_search.json"), report)?;
    let mut dumped = Vec::new();
    for s in &report.samples {
        if let Some(w) = &s.operator {
            let path = dir.join(format!("{}_{}.json", serde_json::to_value(s.status).unwrap().as_str().unwrap_or("sample"), s.seed));
            save_operator(&path, w)?;
            dumped.push(path);
        }
    }
    Ok(dumped)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let ctx = Ctx { g: &cli.opts };
    match &cli.command {
        Command::Validate(src) => {
            let w = ctx.required(src)?;
            let scn = match ctx.declared()? {
                Some(s) => s,
                None => Scenario::from_space(w.space().clone())?,
            };
            let expected = scn.d_out_total() as f64;
            let min_eigenvalue = w.min_eigenvalue();
            let validity_residual = validity_subspace(&scn)?.residual(&w)?;
            let normalized = (w.trace() - expected).abs() <= 1e-8 * expected;
            let v = Validation {
                valid: min_eigenvalue >= -1e-9 * w.hs_norm().max(1.0) && validity_residual <= 1e-8,
                normalized,
                trace: w.trace(),
                expected_trace: expected,
                min_eigenvalue,
                validity_residual,
                dim: w.dim(),
            };
            println!(
                "{}, {} (trace {}, min eigenvalue {:.3e}, validity residual {:.3e})",
                if v.valid { "valid" } else { "invalid" },
                if normalized { "normalized" } else { "not normalized" },
                v.trace,
                min_eigenvalue,
                validity_residual
            );
            ctx.emit("validate", &v)?;
            Ok(Outcome::Definitive)
        }
        Command::Robustness(src) => {
            let w = ctx.required(src)?;
            let cone = ctx.cone_for(&w)?;
            let res = random_robustness(&w, &cone, &ctx.options())?;
            println!("r* = {:.9} in {} ({:?}), verdict {:?}", res.r_star, cone.name, res.status, res.verdict);
            write_json(&ctx.path("robustness.json"), &ResultJson::from(&res))?;
            if ctx.g.format == Format::Csv {
                let row = RobustnessRow {
                    cone: cone.name.clone(),
                    r_star: res.r_star,
                    verdict: res.verdict,
                    status: res.status,
                    iterations: res.iterations,
                    witness_value: res.witness_value,
                    duality_gap: res.duality_gap(),
                };
                write_csv(&ctx.path("robustness.csv"), &[row])?;
            }
            if let Some(s) = &res.witness {
                save_operator(&ctx.path("witness.json"), s)?;
            }
            if let Some(d) = &res.decomposition {
                write_json(&ctx.path("decomposition.json"), &DecompositionJson::new(d, res.decomposition_report, COMPONENT_CUTOFF))?;
            }
            Ok(if res.verdict == Verdict::Undecided { Outcome::Undecided } else { Outcome::Definitive })
        }
        Command::Witness { source, out } => {
            let w = ctx.required(source)?;
            let cone = ctx.cone_for(&w)?;
            let res = random_robustness(&w, &cone, &ctx.options())?;
            let s = res.witness.as_ref().ok_or_else(|| Error::NonCertifying("no usable dual multipliers".into()))?;
            let path = out.clone().unwrap_or_else(|| ctx.path("witness.json"));
            save_operator(&path, s)?;
            println!(
                "Tr[S·W] = {:.9} (r* = {:.9}, verdict {:?}); witness written to {}",
                res.witness_value.unwrap_or(f64::NAN),
                res.r_star,
                res.verdict,
                path.display()
            );
            write_json(&ctx.path("robustness.json"), &ResultJson::from(&res))?;
            Ok(if res.verdict == Verdict::Nonseparable { Outcome::Definitive } else { Outcome::Undecided })
        }
        Command::VerifyWitness { witness, source } => {
            let s = load_operator(witness)?;
            let w = ctx.operator(source)?;
            if let Some(w) = &w {
                s.same_space(w)?;
            }
            let cone = ctx.cone_for(&s)?;
            let chk = verify_witness(&s, &dual_cone(&cone), &ctx.options())?;
            let row = WitnessRow {
                cone: cone.name.clone(),
                t_star: chk.t_star,
                accepted: chk.accepted,
                status: chk.status,
                value_on_input: w.as_ref().map(|w| s.hs_inner(w)),
            };
            println!(
                "{} in the dual of {} (t* = {:.3e}, {:?})",
                if chk.accepted { "accepted" } else { "rejected" },
                cone.name,
                chk.t_star,
                chk.status
            );
            if let Some(v) = row.value_on_input {
                println!("Tr[S·W] = {v:.12}");
            }
            ctx.emit("verify_witness", &row)?;
            Ok(if chk.accepted || chk.status == SolveStatus::Optimal { Outcome::Definitive } else { Outcome::Undecided })
        }
        Command::Decompose(src) => {
            let w = ctx.required(src)?;
            let cone = ctx.cone_for(&w)?;
            let opts = RobustnessOptions { check_input: false, ..ctx.options() };
            let (row, outcome) = match membership(&cone, &w, &opts)? {
                Membership::Member(dec) => {
                    let report = dec.verify()?;
                    let file = DecompositionJson::new(&dec, Some(report), COMPONENT_CUTOFF);
                    println!("member of {}: {} nonzero components", cone.name, file.components.len());
                    for c in &file.components {
                        println!("  {}", c.label);
                    }
                    write_json(&ctx.path("decomposition.json"), &file)?;
                    let n = file.components.len();
                    (MembershipRow { cone: cone.name.clone(), member: Some(true), components: n, r_star: None }, Outcome::Definitive)
                }
                Membership::NotMember { r_star, witness } => {
                    println!("not a member of {} (r* = {r_star:.9}); witness written", cone.name);
                    save_operator(&ctx.path("witness.json"), &witness)?;
                    (MembershipRow { cone: cone.name.clone(), member: Some(false), components: 0, r_star: Some(r_star) }, Outcome::Definitive)
                }
                Membership::Undecided { residuals, .. } => {
                    println!("undecided for {} (residuals {residuals:?})", cone.name);
                    (MembershipRow { cone: cone.name.clone(), member: None, components: 0, r_star: None }, Outcome::Undecided)
                }
            };
            ctx.emit("decompose", &row)?;
            Ok(outcome)
        }
        Command::Evaluate { witness, source } => {
            let s = load_operator(witness)?;
            let w = ctx.required(source)?;
            s.same_space(&w)?;
            let noise = crate::model_zoo::white_noise(&Scenario::from_space(w.space().clone())?);
            let row = EvaluationRow { value: s.hs_inner(&w), witness_trace_on_noise: s.hs_inner(&noise) };
            println!("Tr[S·W] = {:.12}", row.value);
            ctx.emit("evaluate", &row)?;
            Ok(Outcome::Definitive)
        }
        Command::Examples { action } => match action {
            ExamplesAction::List => {
                for m in NamedModel::all() {
                    let w = m.build(None)?;
                    println!("{:14} dim {:3}  {}", serde_json::to_value(&m).unwrap().as_str().unwrap_or(""), w.dim(), w.space());
                }
                Ok(Outcome::Definitive)
            }
            ExamplesAction::Build { id, out, psi } => {
                let psi = psi.as_deref().map(parse_psi).transpose()?;
                let w = NamedModel::parse(id)?.build(psi)?;
                save_operator(out, &w)?;
                println!("{id}: {}x{} operator on {} written to {}", w.dim(), w.dim(), w.space(), out.display());
                Ok(Outcome::Definitive)
            }
        },
        Command::SampleSearch { symmetric, inject, flag } => {
            let scn = ctx.declared()?.ok_or_else(|| Error::BadParams("sample-search needs --scenario".into()))?;
            let mut cfg = GapSearchConfig::for_scenario(&scn);
            cfg.flag_threshold = *flag;
            cfg.symmetric = symmetric.as_ref().map(|s| s.split(',').map(|p| p.trim().to_string()).collect());
            let o = ctx.options();
            if ctx.g.tol.is_some() {
                cfg.solver.eps_abs = o.solver.eps_abs;
                cfg.solver.eps_rel = o.solver.eps_rel;
            }
            if ctx.g.max_iter.is_some() {
                cfg.solver.max_iter = o.solver.max_iter;
            }
            cfg.solver.anderson = o.solver.anderson;
            let mut report = gap_search(&scn, ctx.g.samples, ctx.g.seed, &cfg)?;
            if !inject.is_empty() {
                let extra = inject
                    .iter()
                    .enumerate()
                    .map(|(i, p)| Ok((i as u64, load_operator(p)?)))
                    .collect::<Result<Vec<_>>>()?;
                report.samples.extend(gap_search_on(&scn, extra, &cfg)?);
            }
            let dumped = write_gap_report(&ctx.g.out_dir, &report)?;
            println!(
                "{} samples: max |gap| {:.3e}, {} flagged, {} unconverged, {} failed; {} operators dumped",
                report.samples.len(),
                report.max_abs_gap(),
                report.count(SampleStatus::Flagged),
                report.count(SampleStatus::Unconverged),
                report.count(SampleStatus::Failed),
                dumped.len()
            );
            let clean = report.count(SampleStatus::Unconverged) + report.count(SampleStatus::Failed) == 0;
            Ok(if clean { Outcome::Definitive } else { Outcome::Undecided })
        }
    }
}
