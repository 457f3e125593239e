//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, unreadable or
//! unparsable input), 2 on numeric or validation failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{fig2_data, run_sweep, write_sweep_csv, SweepSpec};
use crate::elements::Selector;
use crate::error::{Error, Result};
use crate::gates::{self, CPath3Layout, Chain, GateParams, GateReport};
use crate::pipelines::{self, Qudit};
use crate::program::{matrix_spec, parse_state_spec, register_amplitudes, register_state, run_program, CircuitProgram};
use crate::state::{HybridState, PhotonId, Pol, StateSnapshot};
use crate::synthesis::{frobenius_distance, matrix_from_json, reck_decompose, CMatrix, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "qubus", version, about = "Weak cross-Kerr photonic gate simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct GlobalArgs {
    /// JSON file with any of the keys below; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long = "theta-probe", global = true)]
    pub theta_probe: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Output file (directory for `fig2`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Execute a circuit program (JSON).
    Run { program: PathBuf },
    /// Run one named gate on an input state.
    Gate {
        name: String,
        /// Basis string (`HVH`), coefficient list (`0.6,0.8`) or `haar:SEED`.
        #[arg(long)]
        input: Option<String>,
        /// Unitary: inline JSON rows or a name such as `cnot`, `qft:4`, `haar:8:1`.
        #[arg(long)]
        matrix: Option<String>,
        /// Number of control photons for controlled gates.
        #[arg(long)]
        controls: Option<usize>,
        #[arg(long, value_enum)]
        layout: Option<LayoutArg>,
    },
    /// Evaluate a parameter sweep (JSON spec).
    Sweep { spec: PathBuf },
    /// Decompose a unitary (JSON rows) into a beam-splitter mesh.
    Decompose { matrix: PathBuf },
    /// Photon-number distributions of the qubus readout and detector peaks.
    Fig2 {
        #[arg(long = "beta-sq", default_value_t = 20.0)]
        beta_sq: f64,
        #[arg(long, default_value_t = 4)]
        peaks: usize,
    },
    /// Re-run golden programs and compare their final states.
    Verify { dir: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Split,
    Whole,
}

impl From<LayoutArg> for CPath3Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Split => CPath3Layout::SplitRail,
            LayoutArg::Whole => CPath3Layout::WholeRail,
        }
    }
}

/// Resolved configuration: defaults, then the config file, then flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub theta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub theta_probe: f64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 4000f64.sqrt(),
            theta: 0.05,
            gamma: 100.0,
            eta: 0.95,
            theta_probe: 0.05,
            seed: 0,
            format: Format::Json,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn resolve(g: &GlobalArgs) -> std::result::Result<Self, CliError> {
        let mut c = match &g.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = g.$f { c.$f = v; })* };
        }
        set!(alpha, theta, gamma, eta, theta_probe, seed, format);
        if g.out.is_some() {
            c.out = g.out.clone();
        }
        Ok(c)
    }

    pub fn gate_params(&self) -> GateParams {
        GateParams::new(self.alpha, self.theta)
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_) => 1,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

fn read(path: &Path) -> std::result::Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Output of `gate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateDemo {
    pub gate: String,
    pub input: Vec<[f64; 2]>,
    pub report: GateReport,
    pub state: StateSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

/// Options of a named gate run.
#[derive(Clone, Debug, Default)]
pub struct GateOptions {
    pub matrix: Option<CMatrix>,
    pub controls: Option<usize>,
    pub layout: CPath3Layout,
    pub seed: u64,
}

/// Gate names accepted by `gate`, with the default photon count of each.
pub const GATE_NAMES: &[(&str, usize)] = &[
    ("parity", 2),
    ("cpath", 2),
    ("cpath2", 3),
    ("cpath3", 3),
    ("disentangler", 2),
    ("entangler1", 2),
    ("entangler2", 2),
    ("entangler3", 3),
    ("entangler4", 3),
    ("merging", 2),
    ("merging-n", 3),
    ("two-qubit", 2),
    ("multi-qubit", 3),
    ("toffoli", 3),
    ("cn-u1", 3),
    ("cn-uk", 4),
    ("to-qudit", 3),
    ("from-qudit", 3),
    ("teleport", 3),
];

fn default_photons(name: &str) -> Result<usize> {
    GATE_NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| *k)
        .ok_or_else(|| Error::Parse(format!("unknown gate `{name}`")))
}

fn needs(ids: &[PhotonId], k: usize, name: &str) -> Result<()> {
    if ids.len() < k {
        return Err(Error::invalid(format!("`{name}` needs at least {k} photons, got {}", ids.len())));
    }
    Ok(())
}

fn exactly(ids: &[PhotonId], k: usize, name: &str) -> Result<()> {
    if ids.len() != k {
        return Err(Error::invalid(format!("`{name}` acts on {k} photons, got {}", ids.len())));
    }
    Ok(())
}

fn merge_back(chain: &mut Chain, x: PhotonId, paths: &[String], indicator: Selector, p: &GateParams) -> Result<()> {
    let out = chain.gate(|st| gates::merging(st, x, paths, None, indicator, p))?;
    chain.apply(|st| st.relabel_photon(out.carrier, x))
}

/// Runs gate `name` on photons `ids` of `s`, preceded by whatever gates are
/// needed to put the photons into the layout the gate expects.
pub fn run_named_gate(
    name: &str,
    s: &HybridState,
    ids: &[PhotonId],
    opts: &GateOptions,
    p: &GateParams,
) -> Result<(HybridState, GateReport)> {
    let mut chain = Chain::new(s.clone());
    let n = ids.len();
    let matrix = |default: &str| -> Result<CMatrix> {
        match &opts.matrix {
            Some(m) => Ok(m.clone()),
            None => crate::program::named_matrix(default),
        }
    };
    match name {
        "parity" => {
            exactly(ids, 2, name)?;
            chain.gate(|st| gates::parity_gate(st, ids[0], ids[1], p))?;
        }
        "cpath" => {
            exactly(ids, 2, name)?;
            chain.gate(|st| gates::c_path(st, ids[0], ids[1], p))?;
        }
        "cpath2" => {
            exactly(ids, 3, name)?;
            let o = chain.gate(|st| gates::c_path(st, ids[1], ids[2], p))?;
            let paths = [o.first, o.second].concat();
            chain.gate(|st| gates::c_path2(st, ids[0], ids[2], &paths, p))?;
        }
        "cpath3" => {
            exactly(ids, 3, name)?;
            let o = chain.gate(|st| gates::c_path(st, ids[0], ids[1], p))?;
            let tp = vec![gates::single_path(&chain.state, ids[2])?];
            chain.gate(|st| gates::c_path3(st, ids[1], (&o.first[0], &o.second[0]), opts.layout, ids[2], &tp, p))?;
        }
        "disentangler" => {
            exactly(ids, 2, name)?;
            let o = chain.gate(|st| gates::c_path(st, ids[0], ids[1], p))?;
            chain.gate(|st| gates::disentangler(st, ids[0], ids[1], &o.second, p))?;
        }
        "entangler1" => {
            exactly(ids, 2, name)?;
            let o = chain.gate(|st| gates::c_path(st, ids[0], ids[1], p))?;
            let anc = chain.state.registry().next_photon_id();
            chain.apply(|st| Ok(gates::prepare_plus(st, anc)?.0))?;
            let paths = [o.first, o.second].concat();
            chain.gate(|st| gates::entangler1(st, anc, ids[1], &paths, p))?;
        }
        "entangler2" => {
            exactly(ids, 2, name)?;
            let q = chain.gate(|st| pipelines::to_qudit_circuit(st, ids, p))?;
            chain.gate(|st| gates::entangler2(st, ids[0], q.photon, &q.paths[0], &q.paths[1], p))?;
        }
        "entangler3" | "entangler4" => {
            needs(ids, 3, name)?;
            let q = chain.gate(|st| pipelines::to_qudit_circuit(st, ids, p))?;
            if name == "entangler3" {
                let half = q.paths.len() / 2;
                let (h, v) = q.paths.split_at(half);
                chain.gate(|st| gates::entangler3(st, q.companions[0], q.photon, h, v, p))?;
            } else {
                let anc = chain.state.registry().next_photon_id();
                chain.apply(|st| Ok(gates::prepare_plus(st, anc)?.0))?;
                chain.gate(|st| gates::entangler4(st, anc, q.photon, &q.paths, p))?;
            }
        }
        "merging" => {
            exactly(ids, 2, name)?;
            let o = chain.gate(|st| gates::c_path(st, ids[0], ids[1], p))?;
            merge_back(
                &mut chain,
                ids[1],
                &[o.first[0].clone(), o.second[0].clone()],
                Selector::pol(ids[0], Pol::V),
                p,
            )?;
        }
        "merging-n" | "from-qudit" => {
            needs(ids, 2, name)?;
            let q: Qudit = chain.gate(|st| pipelines::to_qudit_circuit(st, ids, p))?;
            chain.gate(|st| pipelines::from_qudit(st, &q, opts.matrix.as_ref(), p))?;
        }
        "two-qubit" => {
            exactly(ids, 2, name)?;
            let u = matrix("cnot")?;
            chain.gate(|st| pipelines::two_qubit_gate(st, ids[0], ids[1], &u, p))?;
        }
        "multi-qubit" => {
            let u = matrix(&format!("haar:{}:{}", 1 << n, opts.seed))?;
            chain.gate(|st| pipelines::multi_qubit_gate(st, ids, &u, p))?;
        }
        "toffoli" | "cn-u1" => {
            needs(ids, 2, name)?;
            let (controls, target) = ids.split_at(n - 1);
            if name == "toffoli" {
                chain.gate(|st| pipelines::toffoli(st, controls, target[0], opts.layout, p))?;
            } else {
                let u = matrix("x")?;
                chain.gate(|st| pipelines::cn_u1(st, controls, target[0], &u, opts.layout, p))?;
            }
        }
        "cn-uk" => {
            needs(ids, 2, name)?;
            let c = opts.controls.unwrap_or(n / 2);
            if c == 0 || c >= n {
                return Err(Error::invalid(format!("{c} controls leave no target among {n} photons")));
            }
            let (controls, targets) = ids.split_at(c);
            let u = matrix(&format!("haar:{}:{}", 1 << targets.len(), opts.seed))?;
            chain.gate(|st| pipelines::cn_uk(st, controls, targets, &u, opts.layout, p))?;
        }
        "to-qudit" => {
            chain.gate(|st| pipelines::to_qudit_circuit(st, ids, p))?;
        }
        "teleport" => {
            let (st, anc) = pipelines::teleport_ancillas(&chain.state, n)?;
            chain.state = st;
            chain.gate(|st| pipelines::to_qudit_teleport(st, ids, &anc, p))?;
        }
        other => return Err(Error::Parse(format!("unknown gate `{other}`"))),
    }
    let run = chain.finish(name, ());
    Ok((run.state, run.report))
}

pub fn cmd_gate(name: &str, input: Option<&str>, opts: &GateOptions, p: &GateParams) -> Result<GateDemo> {
    let k = default_photons(name)?;
    let spec = input.map(str::to_string).unwrap_or_else(|| format!("haar:{}", opts.seed));
    let n = if spec.starts_with("haar:") { k } else { 0 };
    let a = parse_state_spec(&spec, n)?;
    let (s, ids) = register_state(&a)?;
    let (state, report) = run_named_gate(name, &s, &ids, opts, p)?;
    Ok(GateDemo {
        gate: name.to_string(),
        input: a.iter().map(|z| [z.re, z.im]).collect(),
        report,
        amplitudes: register_amplitudes(&state).map(|v| v.iter().map(|z| [z.re, z.im]).collect()),
        state: state.to_snapshot(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decomposition {
    pub mesh: Mesh,
    pub reconstruction_error: f64,
}

pub fn cmd_decompose(u: &CMatrix) -> Result<Decomposition> {
    let mesh = reck_decompose(u)?;
    let reconstruction_error = frobenius_distance(&mesh.matrix(), u);
    Ok(Decomposition { mesh, reconstruction_error })
}

/// A golden file: a program and the state it must produce.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Golden {
    pub program: CircuitProgram,
    pub expected: StateSnapshot,
    #[serde(default = "default_golden_tol")]
    pub tolerance: f64,
}

fn default_golden_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyLine {
    pub file: String,
    pub passed: bool,
    pub fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn verify_golden(path: &Path) -> VerifyLine {
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let result = (|| -> Result<(f64, f64)> {
        let g: Golden = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let out = run_program(&g.program)?;
        let got = HybridState::from_snapshot(&out.state)?;
        let want = HybridState::from_snapshot(&g.expected)?;
        Ok((got.fidelity(&want)?, g.tolerance))
    })();
    match result {
        Ok((f, tol)) => VerifyLine { file, passed: f >= 1.0 - tol, fidelity: Some(f), error: None },
        Err(e) => VerifyLine { file, passed: false, fidelity: None, error: Some(e.to_string()) },
    }
}

pub fn cmd_verify(dir: &Path) -> Result<Vec<VerifyLine>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!("no golden files in {}", dir.display())));
    }
    Ok(files.iter().map(|f| verify_golden(f)).collect())
}

fn emit(cfg: &RunConfig, text: &str) -> std::result::Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> std::result::Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn json_only(cfg: &RunConfig, cmd: &str) -> std::result::Result<(), CliError> {
    if cfg.format == Format::Csv {
        return Err(CliError::usage(format!("`{cmd}` has no CSV output")));
    }
    Ok(())
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> std::result::Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.global)?;
    let p = cfg.gate_params();
    match &cli.command {
        Command::Run { program } => {
            json_only(&cfg, "run")?;
            let mut prog: CircuitProgram = parse_json(program)?;
            if cli.global.alpha.is_some() || cli.global.theta.is_some() {
                prog.params.alpha = cfg.alpha;
                prog.params.theta = cfg.theta;
            }
            emit(&cfg, &to_json(&run_program(&prog)?)?)
        }
        Command::Gate { name, input, matrix, controls, layout } => {
            json_only(&cfg, "gate")?;
            let matrix = match matrix {
                Some(m) => {
                    let v: Value = serde_json::from_str(m).unwrap_or_else(|_| Value::String(m.clone()));
                    Some(matrix_spec(&v)?)
                }
                None => None,
            };
            let opts = GateOptions {
                matrix,
                controls: *controls,
                layout: layout.map(Into::into).unwrap_or_default(),
                seed: cfg.seed,
            };
            emit(&cfg, &to_json(&cmd_gate(name, input.as_deref(), &opts, &p)?)?)
        }
        Command::Sweep { spec } => {
            let spec: SweepSpec = parse_json(spec)?;
            let rows = run_sweep(&spec)?;
            match cfg.format {
                Format::Json => emit(&cfg, &to_json(&rows)?),
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_sweep_csv(&mut buf, &rows)?;
                    emit(&cfg, &String::from_utf8_lossy(&buf))
                }
            }
        }
        Command::Decompose { matrix } => {
            let u = matrix_from_json(&read(matrix)?)?;
            let d = cmd_decompose(&u)?;
            match cfg.format {
                Format::Json => emit(&cfg, &to_json(&d)?),
                Format::Csv => {
                    let mut wr = csv::Writer::from_writer(Vec::new());
                    wr.write_record(["a", "b", "theta", "phi"]).map_err(Error::from)?;
                    for r in &d.mesh.rotations {
                        wr.write_record([r.a.to_string(), r.b.to_string(), r.theta.to_string(), r.phi.to_string()])
                            .map_err(Error::from)?;
                    }
                    let buf = wr.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
                    emit(&cfg, &String::from_utf8_lossy(&buf))
                }
            }
        }
        Command::Fig2 { beta_sq, peaks } => {
            let data = fig2_data(cfg.gamma, cfg.theta_probe, *beta_sq, *peaks)?;
            let summary = json!({
                "gamma": data.gamma,
                "theta_probe": data.theta_probe,
                "beta_sq": data.beta_sq,
                "peak_means": data.peaks.iter().map(|pk| pk.mean).collect::<Vec<_>>(),
                "adjacent_overlaps": data.adjacent_overlaps,
                "dominant": data.dominant,
                "mass_8_35": crate::analysis::mass_between(&data.qubus_pmf, 8, 35),
            });
            match &cfg.out {
                Some(dir) => {
                    let mut files = data.write_csv(dir)?;
                    let path = dir.join("fig2.json");
                    std::fs::write(&path, to_json(&summary)?).map_err(Error::from)?;
                    files.push(path);
                    for f in files {
                        println!("{}", f.display());
                    }
                    Ok(())
                }
                None => {
                    json_only(&cfg, "fig2 without --out")?;
                    emit(&cfg, &to_json(&summary)?)
                }
            }
        }
        Command::Verify { dir } => {
            let lines = cmd_verify(dir)?;
            let failed = lines.iter().filter(|l| !l.passed).count();
            let mut text = String::new();
            for l in &lines {
                let status = if l.passed { "PASS" } else { "FAIL" };
                match (&l.fidelity, &l.error) {
                    (Some(f), _) => text.push_str(&format!("{status} {} fidelity={f:.12}\n", l.file)),
                    (None, Some(e)) => text.push_str(&format!("{status} {} error: {e}\n", l.file)),
                    _ => {}
                }
            }
            text.push_str(&format!("{} passed, {failed} failed\n", lines.len() - failed));
            emit(&cfg, &text)?;
            if failed > 0 {
                return Err(CliError { code: 2, message: format!("{failed} golden file(s) failed") });
            }
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
