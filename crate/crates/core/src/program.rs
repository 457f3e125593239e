//! JSON circuit programs and the gate dispatcher shared with the CLI.
//!
//! A program names an input state, optional ancillas, and an ordered list of
//! steps. Each step is a gate (tagged by `gate`) or a bare optical element.
//! Photons are referred to by id and paths by name; gates that create paths
//! name them by priming the path they split (`p2` → `p2'`), and every step's
//! output (new path names, carrier ids) is recorded in the result.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::elements::{ElementOp, Selector};
use crate::error::{Error, Result};
use crate::gates::{self, CPath3Layout, Chain, GateParams, GateReport, GateRun};
use crate::pipelines::{self, Qudit, TeleportAncillas};
use crate::state::{HybridState, PhotonId, StateSnapshot, C64};
use crate::synthesis::{
    matrix_from_value, parse_complex, qft_matrix, random_haar_unitary, random_state_vector, sign_interference4, CMatrix,
};

/// Input state of a program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    /// Basis string (`"HVH"`) or coefficient list (`"[0.6, 0.8]"`).
    Spec(String),
    /// Any state spec with an explicit photon count (needed for `haar:SEED`).
    Sized {
        spec: String,
        photons: usize,
    },
    /// Polarization qubits on named paths with joint amplitudes.
    Qubits {
        photons: Vec<(PhotonId, String)>,
        amplitudes: Vec<Value>,
    },
    Snapshot {
        snapshot: StateSnapshot,
    },
}

/// Photons added next to the input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AncillaDecl {
    Plus {
        id: PhotonId,
        #[serde(default)]
        path: Option<String>,
    },
    Photon {
        id: PhotonId,
        path: String,
        amplitudes: [Value; 2],
    },
    Bell {
        ids: (PhotonId, PhotonId),
        #[serde(default)]
        paths: Option<(String, String)>,
    },
}

/// One program step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "kebab-case")]
pub enum Step {
    Element {
        element: ElementOp,
    },
    Parity {
        p1: PhotonId,
        p2: PhotonId,
    },
    Cpath {
        control: PhotonId,
        target: PhotonId,
    },
    Cpath2 {
        control: PhotonId,
        target: PhotonId,
        paths: Vec<String>,
    },
    Cpath3 {
        control: PhotonId,
        rails: (String, String),
        #[serde(default)]
        layout: CPath3Layout,
        target: PhotonId,
        #[serde(default)]
        target_paths: Option<Vec<String>>,
    },
    Disentangler {
        control: PhotonId,
        target: PhotonId,
        v_group: Vec<String>,
    },
    Entangler1 {
        ancilla: PhotonId,
        x: PhotonId,
        paths: Vec<String>,
    },
    Entangler2 {
        control: PhotonId,
        x: PhotonId,
        h_path: String,
        v_path: String,
    },
    Entangler3 {
        control: PhotonId,
        x: PhotonId,
        h_group: Vec<String>,
        v_group: Vec<String>,
    },
    Entangler4 {
        ancilla: PhotonId,
        x: PhotonId,
        paths: Vec<String>,
    },
    Merging {
        x: PhotonId,
        paths: Vec<String>,
        #[serde(default)]
        ancilla: Option<PhotonId>,
        indicator: Selector,
    },
    MergingN {
        x: PhotonId,
        paths: Vec<String>,
        #[serde(default)]
        ancilla: Option<PhotonId>,
        indicators: Vec<Selector>,
        #[serde(default)]
        interference: Option<Value>,
    },
    TwoQubit {
        p1: PhotonId,
        p2: PhotonId,
        matrix: Value,
    },
    MultiQubit {
        photons: Vec<PhotonId>,
        matrix: Value,
        #[serde(default)]
        interference: Option<Value>,
    },
    Toffoli {
        controls: Vec<PhotonId>,
        target: PhotonId,
        #[serde(default)]
        layout: CPath3Layout,
    },
    CnU1 {
        controls: Vec<PhotonId>,
        target: PhotonId,
        matrix: Value,
        #[serde(default)]
        layout: CPath3Layout,
    },
    CnUk {
        controls: Vec<PhotonId>,
        targets: Vec<PhotonId>,
        matrix: Value,
        #[serde(default)]
        layout: CPath3Layout,
    },
    ToQudit {
        photons: Vec<PhotonId>,
    },
    FromQudit {
        photon: PhotonId,
        paths: Vec<String>,
        companions: Vec<PhotonId>,
        #[serde(default)]
        interference: Option<Value>,
    },
    Teleport {
        photons: Vec<PhotonId>,
        bell: (PhotonId, PhotonId),
        plus: Vec<PhotonId>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitProgram {
    #[serde(default)]
    pub params: GateParams,
    pub input: InputSpec,
    #[serde(default)]
    pub ancillas: Vec<AncillaDecl>,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramResult {
    pub report: GateReport,
    /// Per-step gate output (`null` for elements and gates without output).
    pub outputs: Vec<Value>,
    pub state: StateSnapshot,
    /// Joint polarization amplitudes `[re, im]` of the remaining photons in
    /// id order, when each sits on a single path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

fn complex_list(values: &[Value]) -> Result<Vec<C64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            parse_complex(v).ok_or_else(|| Error::Parse(format!("amplitude {i} is not a number or [re, im]")))
        })
        .collect()
}

/// Parses a state spec into joint amplitudes for `n` photons (`n = 0`
/// infers the count from the spec).
pub fn parse_state_spec(spec: &str, n: usize) -> Result<Vec<C64>> {
    let spec = spec.trim();
    if !spec.is_empty() && spec.chars().all(|c| c == 'H' || c == 'V') {
        if n != 0 && spec.len() != n {
            return Err(Error::Parse(format!("basis `{spec}` has {} letters, expected {n}", spec.len())));
        }
        let k = spec.chars().fold(0usize, |k, c| (k << 1) | usize::from(c == 'V'));
        let mut a = vec![C64::new(0.0, 0.0); 1 << spec.len()];
        a[k] = C64::new(1.0, 0.0);
        return Ok(a);
    }
    if let Some(seed) = spec.strip_prefix("haar:") {
        if n == 0 {
            return Err(Error::Parse("`haar:SEED` needs an explicit photon count".into()));
        }
        let seed: u64 = seed.parse().map_err(|_| Error::Parse(format!("bad seed in `{spec}`")))?;
        return Ok(random_state_vector(1 << n, seed));
    }
    let text = if spec.starts_with('[') { spec.to_string() } else { format!("[{spec}]") };
    let values: Vec<Value> =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("state spec `{spec}`: {e}")))?;
    let a = complex_list(&values)?;
    if !a.len().is_power_of_two() || a.len() < 2 || (n != 0 && a.len() != 1 << n) {
        return Err(Error::Parse(format!("{} coefficients do not describe a qubit register", a.len())));
    }
    Ok(a)
}

/// Photons `1..=n` on paths `p1..pn` with joint amplitudes `a`.
pub fn register_state(a: &[C64]) -> Result<(HybridState, Vec<PhotonId>)> {
    let n = a.len().trailing_zeros();
    let ids: Vec<PhotonId> = (1..=n).map(PhotonId).collect();
    let names: Vec<String> = ids.iter().map(|p| format!("p{}", p.0)).collect();
    let photons: Vec<(PhotonId, &str)> = ids.iter().zip(&names).map(|(p, s)| (*p, s.as_str())).collect();
    Ok((HybridState::polarization_state(&photons, a)?, ids))
}

impl InputSpec {
    pub fn build(&self) -> Result<HybridState> {
        match self {
            InputSpec::Spec(spec) => Ok(register_state(&parse_state_spec(spec, 0)?)?.0),
            InputSpec::Sized { spec, photons } => Ok(register_state(&parse_state_spec(spec, *photons)?)?.0),
            InputSpec::Qubits { photons, amplitudes } => {
                let pairs: Vec<(PhotonId, &str)> = photons.iter().map(|(p, s)| (*p, s.as_str())).collect();
                HybridState::polarization_state(&pairs, &complex_list(amplitudes)?)
            }
            InputSpec::Snapshot { snapshot } => HybridState::from_snapshot(snapshot),
        }
    }
}

impl AncillaDecl {
    pub fn add_to(&self, s: &HybridState) -> Result<HybridState> {
        match self {
            AncillaDecl::Plus { id, path } => {
                let path = path.clone().unwrap_or_else(|| format!("a{}", id.0));
                s.tensor(&HybridState::plus(*id, &path)?)
            }
            AncillaDecl::Photon { id, path, amplitudes } => {
                let a = complex_list(amplitudes)?;
                s.tensor(&HybridState::single_photon(*id, path, a[0], a[1])?)
            }
            AncillaDecl::Bell { ids, paths } => {
                let (n1, n2) = paths.clone().unwrap_or_else(|| (format!("b{}", ids.0 .0), format!("b{}", ids.1 .0)));
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let z = C64::new(0.0, 0.0);
                let pair = HybridState::polarization_state(
                    &[(ids.0, &n1), (ids.1, &n2)],
                    &[C64::new(h, 0.0), z, z, C64::new(h, 0.0)],
                )?;
                s.tensor(&pair)
            }
        }
    }
}

fn pauli(entries: [f64; 8]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[0, 2, 4, 6].map(|i| C64::new(entries[i], entries[i + 1])))
}

/// Named matrices: `identity:N`, `x`, `y`, `z`, `h`, `cnot`, `cz`, `swap`,
/// `toffoli`, `qft:N`, `sign4`, `haar:N:SEED`.
pub fn named_matrix(name: &str) -> Result<CMatrix> {
    let parts: Vec<&str> = name.split(':').collect();
    let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad number `{s}` in `{name}`")));
    let perm = |n: usize, f: &dyn Fn(usize) -> usize| {
        let mut m = CMatrix::zeros(n, n);
        for j in 0..n {
            m[(f(j), j)] = C64::new(1.0, 0.0);
        }
        m
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match parts.as_slice() {
        ["identity", n] => CMatrix::identity(int(n)?, int(n)?),
        ["x"] => pauli([0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
        ["y"] => pauli([0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0]),
        ["z"] => pauli([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0]),
        ["h"] => pauli([h, 0.0, h, 0.0, h, 0.0, -h, 0.0]),
        ["cnot"] => perm(4, &|j| if j >= 2 { j ^ 1 } else { j }),
        ["swap"] => perm(4, &|j| ((j & 1) << 1) | (j >> 1)),
        ["cz"] => {
            let mut m = CMatrix::identity(4, 4);
            m[(3, 3)] = C64::new(-1.0, 0.0);
            m
        }
        ["toffoli"] => perm(8, &|j| if j >= 6 { j ^ 1 } else { j }),
        ["qft", n] => qft_matrix(int(n)?),
        ["sign4"] => sign_interference4(),
        ["haar", n, seed] => {
            random_haar_unitary(int(n)?, seed.parse().map_err(|_| Error::Parse(format!("bad seed in `{name}`")))?)
        }
        _ => return Err(Error::Parse(format!("unknown matrix `{name}`"))),
    })
}

/// A matrix given inline (rows of numbers or `[re, im]`) or by name.
pub fn matrix_spec(v: &Value) -> Result<CMatrix> {
    match v {
        Value::String(name) => named_matrix(name),
        other => matrix_from_value(other),
    }
}

fn opt_matrix(v: &Option<Value>) -> Result<Option<CMatrix>> {
    v.as_ref().map(matrix_spec).transpose()
}

fn erase<T: Serialize>(run: Result<GateRun<T>>) -> Result<GateRun<Value>> {
    let run = run?;
    let out = serde_json::to_value(&run.out)?;
    Ok(GateRun { state: run.state, report: run.report, outcomes: run.outcomes, out })
}

/// Runs one gate step on `s`.
pub fn dispatch(step: &Step, s: &HybridState, p: &GateParams) -> Result<GateRun<Value>> {
    use Step::*;
    match step {
        Element { .. } => Err(Error::invalid("elements are applied directly, not dispatched")),
        Parity { p1, p2 } => erase(gates::parity_gate(s, *p1, *p2, p)),
        Cpath { control, target } => erase(gates::c_path(s, *control, *target, p)),
        Cpath2 { control, target, paths } => erase(gates::c_path2(s, *control, *target, paths, p)),
        Cpath3 { control, rails, layout, target, target_paths } => {
            let tp = match target_paths {
                Some(tp) => tp.clone(),
                None => vec![gates::single_path(s, *target)?],
            };
            erase(gates::c_path3(s, *control, (&rails.0, &rails.1), *layout, *target, &tp, p))
        }
        Disentangler { control, target, v_group } => erase(gates::disentangler(s, *control, *target, v_group, p)),
        Entangler1 { ancilla, x, paths } => erase(gates::entangler1(s, *ancilla, *x, paths, p)),
        Entangler2 { control, x, h_path, v_path } => erase(gates::entangler2(s, *control, *x, h_path, v_path, p)),
        Entangler3 { control, x, h_group, v_group } => erase(gates::entangler3(s, *control, *x, h_group, v_group, p)),
        Entangler4 { ancilla, x, paths } => erase(gates::entangler4(s, *ancilla, *x, paths, p)),
        Merging { x, paths, ancilla, indicator } => {
            erase(gates::merging(s, *x, paths, *ancilla, indicator.clone(), p).map(merge_summary))
        }
        MergingN { x, paths, ancilla, indicators, interference } => {
            let f = opt_matrix(interference)?;
            erase(gates::merging_n(s, *x, paths, *ancilla, indicators, f.as_ref(), p).map(merge_summary))
        }
        TwoQubit { p1, p2, matrix } => erase(pipelines::two_qubit_gate(s, *p1, *p2, &matrix_spec(matrix)?, p)),
        MultiQubit { photons, matrix, interference } => {
            let f = opt_matrix(interference)?;
            erase(pipelines::multi_qubit_gate_with(s, photons, &matrix_spec(matrix)?, f.as_ref(), p))
        }
        Toffoli { controls, target, layout } => erase(pipelines::toffoli(s, controls, *target, *layout, p)),
        CnU1 { controls, target, matrix, layout } => {
            erase(pipelines::cn_u1(s, controls, *target, &matrix_spec(matrix)?, *layout, p))
        }
        CnUk { controls, targets, matrix, layout } => {
            erase(pipelines::cn_uk(s, controls, targets, &matrix_spec(matrix)?, *layout, p))
        }
        ToQudit { photons } => erase(pipelines::to_qudit_circuit(s, photons, p)),
        FromQudit { photon, paths, companions, interference } => {
            let q = Qudit { photon: *photon, paths: paths.clone(), companions: companions.clone() };
            let f = opt_matrix(interference)?;
            erase(pipelines::from_qudit(s, &q, f.as_ref(), p))
        }
        Teleport { photons, bell, plus } => {
            let anc = TeleportAncillas { bell: *bell, plus: plus.clone() };
            erase(pipelines::to_qudit_teleport(s, photons, &anc, p))
        }
    }
}

/// Serializable part of a merge output.
#[derive(Serialize)]
struct MergeSummary {
    carrier: PhotonId,
    carrier_path: String,
}

fn merge_summary(run: GateRun<gates::MergeOut>) -> GateRun<MergeSummary> {
    GateRun {
        state: run.state,
        report: run.report,
        outcomes: run.outcomes,
        out: MergeSummary { carrier: run.out.carrier, carrier_path: run.out.carrier_path },
    }
}

/// Polarization amplitudes of every photon of `s`, in id order, when each is
/// on a single path and no qubus mode remains.
pub fn register_amplitudes(s: &HybridState) -> Option<Vec<C64>> {
    let mut ids = s.registry().photon_ids();
    ids.sort();
    s.polarization_amplitudes(&ids).ok()
}

pub fn run_program(prog: &CircuitProgram) -> Result<ProgramResult> {
    prog.params.validate()?;
    let mut state = prog.input.build()?;
    for a in &prog.ancillas {
        state = a.add_to(&state)?;
    }
    let mut chain = Chain::new(state);
    let mut outputs = Vec::with_capacity(prog.steps.len());
    for (i, step) in prog.steps.iter().enumerate() {
        let res = match step {
            Step::Element { element } => chain.ops(std::slice::from_ref(element)).map(|_| Value::Null),
            other => chain.gate(|st| dispatch(other, st, &prog.params)),
        };
        outputs.push(res.map_err(|e| Error::invalid(format!("step {i}: {e}")))?);
    }
    let run = chain.finish("program", ());
    let amplitudes = register_amplitudes(&run.state).map(|a| a.iter().map(|z| [z.re, z.im]).collect());
    Ok(ProgramResult { report: run.report, outputs, state: run.state.to_snapshot(), amplitudes })
}
