//! Scenario files, task dispatch and report formatting for the `coiso`
//! command-line tool.

use crate::bfv::{
    bfv_kuranishi, bfv_lift_section, bfv_resolution, brst_charge, d_bfv, leaf_to_ghost, lift, ChargeOutcome, ContractionData,
};
use crate::error::Error;
use crate::geom::{contact_to_jacobi, fiberwise_linear_jacobi, is_coisotropic_section, lcs_to_jacobi, ContactChart, DiffForm, SectionOfNormalBundle};
use crate::graded::{omega_e, Connection, GhostWord, GradedDims, GradedSection};
use crate::linfty::{extract_multibrackets, KuranishiReport, LInfinity, LeafForm};
use crate::multider::{MultiDerivation, MultiVectorField};
use crate::ring::{format_torus_integral, parse_fn, scalar_to_json, Chart, RingError, ScalarFn};
use crate::transversal::{Generator, TransversalData};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::fmt;

pub const SCHEMA: u32 = 1;

const TORUS_OBSTRUCTED: &str = include_str!("../scenarios/torus-obstructed.json");
const LEGENDRIAN_JET: &str = include_str!("../scenarios/legendrian-jet.json");

/// Names of the built-in scenarios.
pub const BUILTINS: [&str; 2] = ["torus-obstructed", "legendrian-jet"];

/// Source text of a built-in scenario. Accepts `NAME`, `builtin:NAME` and
/// `examples/NAME`.
pub fn builtin(name: &str) -> Option<&'static str> {
    let bare = name.strip_prefix("builtin:").or_else(|| name.strip_prefix("examples/")).unwrap_or(name);
    match bare.trim_end_matches(".json") {
        "torus-obstructed" => Some(TORUS_OBSTRUCTED),
        "legendrian-jet" => Some(LEGENDRIAN_JET),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub torus: Vec<String>,
    pub fiber: Vec<String>,
    #[serde(default)]
    pub leaf: Vec<String>,
}

/// `coef * d_{coords}` (a multivector monomial) or `coef * dcoords` (a form
/// monomial), depending on the block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coords: Vec<String>,
    pub coef: String,
}

/// `J = P - Q ^ id` with `P` a bivector and `Q` a vector field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiSpec {
    pub p: Vec<Term>,
    #[serde(default)]
    pub q: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    pub theta: Vec<Term>,
    pub reeb: Vec<Term>,
    pub frame: Vec<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transverse_frame: Option<Vec<Vec<Term>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LcsSpec {
    pub omega: Vec<Term>,
    pub theta1: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetSpec {
    pub base_dim: usize,
}

/// A pre-contact form on the zero section with a transverse frame.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransversalSpec {
    pub theta: Vec<Term>,
    pub frame: Vec<Vec<Term>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormalSpec {
    pub order: usize,
}

/// `nabla_along xi^upper = coef xi^lower` summed; `along` is `id` or a
/// coordinate name, indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionTerm {
    pub along: String,
    pub upper: usize,
    pub lower: usize,
    pub coef: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BfvSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connection: Vec<ConnectionTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobi: Option<JacobiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<ContactSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lcs: Option<LcsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jet: Option<JetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transversal: Option<TransversalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formal: Option<FormalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bfv: Option<BfvSpec>,
}

/// A failure classified by exit status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Internal(_) => "internal",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Parse(m) | CliError::Validation(m) | CliError::Internal(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Ring(RingError::Parse { .. } | RingError::UnknownCoordinate(_) | RingError::Json(_)) => CliError::Parse(e.to_string()),
            Error::Invariant(_) => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<RingError> for CliError {
    fn from(e: RingError) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub chart: Chart,
    pub jacobi: Option<MultiDerivation>,
    pub transversal: Option<TransversalData>,
    pub section: Option<SectionOfNormalBundle>,
    pub formal_order: usize,
    pub connection: Connection,
    pub default_tasks: Vec<String>,
}

/// Parses scenario JSON into the raw schema; `serde_json` errors carry the
/// line and column.
pub fn parse_scenario_file(src: &str) -> CliResult<ScenarioFile> {
    let file: ScenarioFile = serde_json::from_str(src).map_err(|e| CliError::Parse(format!("scenario: {e}")))?;
    if file.schema != SCHEMA {
        return Err(CliError::Validation(format!("unsupported schema {}, expected {SCHEMA}", file.schema)));
    }
    Ok(file)
}

pub fn load_scenario(src: &str) -> CliResult<Scenario> {
    build_scenario(&parse_scenario_file(src)?)
}

fn parse_expr(src: &str, chart: &Chart, what: &str) -> CliResult<ScalarFn> {
    parse_fn(src, chart).map_err(|e| CliError::Parse(format!("{what}: `{src}`: {e}")))
}

fn coord_indices(t: &Term, chart: &Chart, arity: usize, what: &str) -> CliResult<Vec<usize>> {
    if t.coords.len() != arity {
        return Err(CliError::Validation(format!("{what}: expected {arity} coordinate(s), got {}", t.coords.len())));
    }
    t.coords.iter().map(|c| chart.coord_index(c).map_err(|e| CliError::Parse(format!("{what}: {e}")))).collect()
}

fn multivector(terms: &[Term], chart: &Chart, degree: usize, what: &str) -> CliResult<MultiVectorField> {
    let (k, m) = chart.dims();
    let mut out = MultiVectorField::zero(k, m, degree);
    for t in terms {
        let idx = coord_indices(t, chart, degree, what)?;
        out = out.add(&MultiVectorField::monomial(&idx, parse_expr(&t.coef, chart, what)?));
    }
    Ok(out)
}

fn restrict_form(theta: &DiffForm) -> DiffForm {
    DiffForm(theta.0.map(ScalarFn::restrict_zero_fibers))
}

fn build_chart(spec: &ChartSpec) -> CliResult<Chart> {
    let leaf = spec
        .leaf
        .iter()
        .map(|n| {
            spec.torus
                .iter()
                .position(|t| t == n)
                .ok_or_else(|| CliError::Validation(format!("leaf coordinate `{n}` is not a torus coordinate")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Chart::new(spec.torus.clone(), spec.fiber.clone(), leaf).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn build_scenario(file: &ScenarioFile) -> CliResult<Scenario> {
    let blocks = [file.jacobi.is_some(), file.contact.is_some(), file.lcs.is_some(), file.jet.is_some(), file.transversal.is_some()];
    let count = blocks.iter().filter(|b| **b).count();
    if count != 1 {
        return Err(CliError::Validation(format!("exactly one structure block is required, found {count}")));
    }
    let mut transversal = None;
    let (chart, jacobi) = if let Some(jet) = &file.jet {
        if jet.base_dim == 0 {
            return Err(CliError::Validation("jet base dimension must be positive".into()));
        }
        let (chart, j) = fiberwise_linear_jacobi(jet.base_dim)?;
        if let Some(spec) = &file.chart {
            if build_chart(spec)? != chart {
                return Err(CliError::Validation("chart block does not match the jet chart".into()));
            }
        }
        (chart, Some(j))
    } else {
        let spec = file.chart.as_ref().ok_or_else(|| CliError::Validation("missing chart block".into()))?;
        let chart = build_chart(spec)?;
        let j = if let Some(js) = &file.jacobi {
            let p = multivector(&js.p, &chart, 2, "jacobi.p")?;
            let q = multivector(&js.q, &chart, 1, "jacobi.q")?;
            Some(MultiDerivation::new(p, q)?)
        } else if let Some(cs) = &file.contact {
            let theta = DiffForm(multivector(&cs.theta, &chart, 1, "contact.theta")?);
            let reeb = multivector(&cs.reeb, &chart, 1, "contact.reeb")?;
            let frame = cs.frame.iter().map(|f| multivector(f, &chart, 1, "contact.frame")).collect::<CliResult<Vec<_>>>()?;
            if let Some(tf) = &cs.transverse_frame {
                let tframe = tf.iter().map(|f| multivector(f, &chart, 1, "contact.transverse_frame")).collect::<CliResult<Vec<_>>>()?;
                transversal = Some(TransversalData::from_contact_frame(chart.clone(), &restrict_form(&theta), tframe)?);
            }
            Some(contact_to_jacobi(&ContactChart::new(chart.clone(), theta, reeb, frame)?)?)
        } else if let Some(ls) = &file.lcs {
            let omega = DiffForm(multivector(&ls.omega, &chart, 2, "lcs.omega")?);
            let theta1 = DiffForm(multivector(&ls.theta1, &chart, 1, "lcs.theta1")?);
            Some(lcs_to_jacobi(&omega, &theta1)?)
        } else if let Some(ts) = &file.transversal {
            let theta = DiffForm(multivector(&ts.theta, &chart, 1, "transversal.theta")?);
            let frame = ts.frame.iter().map(|f| multivector(f, &chart, 1, "transversal.frame")).collect::<CliResult<Vec<_>>>()?;
            transversal = Some(TransversalData::from_contact_frame(chart.clone(), &restrict_form(&theta), frame)?);
            None
        } else {
            None
        };
        (chart, j)
    };
    let (k, m) = chart.dims();
    let section = match &file.section {
        None => None,
        Some(exprs) => {
            if exprs.len() != m {
                return Err(CliError::Validation(format!("section needs {m} components, got {}", exprs.len())));
            }
            let comps = exprs.iter().map(|e| parse_expr(e, &chart, "section")).collect::<CliResult<Vec<_>>>()?;
            Some(SectionOfNormalBundle::new(comps)?)
        }
    };
    let dims = GradedDims::new(k, m, m)?;
    let mut connection = Connection::trivial(dims);
    let bfv = file.bfv.clone().unwrap_or_default();
    for t in &bfv.connection {
        if t.upper == 0 || t.lower == 0 || t.upper > m || t.lower > m {
            return Err(CliError::Validation(format!("connection indices must lie in 1..={m}")));
        }
        let f = parse_expr(&t.coef, &chart, "bfv.connection")?;
        let slot = if t.along == "id" {
            &mut connection.on_id[t.upper - 1][t.lower - 1]
        } else {
            let c = chart.coord_index(&t.along).map_err(|e| CliError::Parse(format!("bfv.connection: {e}")))?;
            &mut connection.on_coord[c][t.upper - 1][t.lower - 1]
        };
        *slot = &*slot + &f;
    }
    Ok(Scenario {
        name: file.name.clone().unwrap_or_else(|| "scenario".into()),
        chart,
        jacobi,
        transversal,
        section,
        formal_order: file.formal.as_ref().map_or(3, |f| f.order),
        connection,
        default_tasks: bfv.tasks,
    })
}

/// A requested task with its argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Task {
    CheckJacobi,
    Coisotropic,
    Multibrackets { max_order: usize },
    Mc,
    Kuranishi,
    Prolong { order: Option<usize> },
    TransversalCrosscheck,
    BfvLift,
    BrstCharge,
    Dbfv,
    BfvKuranishi,
    HplResolve,
}

pub const TASK_NAMES: [&str; 12] = [
    "check-jacobi",
    "coisotropic",
    "multibrackets",
    "mc",
    "kuranishi",
    "prolong",
    "transversal-crosscheck",
    "bfv-lift",
    "brst-charge",
    "dbfv",
    "bfv-kuranishi",
    "hpl-resolve",
];

impl Task {
    /// Parses `NAME[:ARG]`.
    pub fn parse(s: &str) -> CliResult<Task> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |default: Option<usize>| -> CliResult<Option<usize>> {
            match arg {
                None => Ok(default),
                Some(a) => a.parse().map(Some).map_err(|_| CliError::Usage(format!("task `{name}`: `{a}` is not a number"))),
            }
        };
        let no_arg = |t: Task| -> CliResult<Task> {
            match arg {
                None => Ok(t),
                Some(_) => Err(CliError::Usage(format!("task `{name}` takes no argument"))),
            }
        };
        match name {
            "check-jacobi" => no_arg(Task::CheckJacobi),
            "coisotropic" => no_arg(Task::Coisotropic),
            "multibrackets" => Ok(Task::Multibrackets { max_order: num(Some(4))?.unwrap_or(4) }),
            "mc" => no_arg(Task::Mc),
            "kuranishi" => no_arg(Task::Kuranishi),
            "prolong" => Ok(Task::Prolong { order: num(None)? }),
            "transversal-crosscheck" => no_arg(Task::TransversalCrosscheck),
            "bfv-lift" => no_arg(Task::BfvLift),
            "brst-charge" => no_arg(Task::BrstCharge),
            "dbfv" => no_arg(Task::Dbfv),
            "bfv-kuranishi" => no_arg(Task::BfvKuranishi),
            "hpl-resolve" => no_arg(Task::HplResolve),
            _ => Err(CliError::Usage(format!("unknown task `{name}`; known tasks: {}", TASK_NAMES.join(", ")))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Task::CheckJacobi => "check-jacobi".into(),
            Task::Coisotropic => "coisotropic".into(),
            Task::Multibrackets { max_order } => format!("multibrackets:{max_order}"),
            Task::Mc => "mc".into(),
            Task::Kuranishi => "kuranishi".into(),
            Task::Prolong { order: Some(n) } => format!("prolong:{n}"),
            Task::Prolong { order: None } => "prolong".into(),
            Task::TransversalCrosscheck => "transversal-crosscheck".into(),
            Task::BfvLift => "bfv-lift".into(),
            Task::BrstCharge => "brst-charge".into(),
            Task::Dbfv => "dbfv".into(),
            Task::BfvKuranishi => "bfv-kuranishi".into(),
            Task::HplResolve => "hpl-resolve".into(),
        }
    }
}

/// The outcome of one task: a JSON result plus text lines, or an error.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskReport {
    pub task: String,
    pub outcome: std::result::Result<(Value, Vec<String>), CliError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    /// 0 when every task succeeded, otherwise the largest error status.
    pub fn exit_code(&self) -> i32 {
        self.tasks.iter().filter_map(|t| t.outcome.as_ref().err().map(CliError::exit_code)).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Value {
        let tasks: Vec<Value> = self
            .tasks
            .iter()
            .map(|t| match &t.outcome {
                Ok((v, _)) => json!({"task": t.task, "status": "ok", "result": v}),
                Err(e) => json!({"task": t.task, "status": "error", "error": {"kind": e.kind(), "message": e.message()}}),
            })
            .collect();
        json!({"schema": SCHEMA, "scenario": self.scenario, "tasks": tasks})
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("scenario: {}\n", self.scenario);
        for t in &self.tasks {
            match &t.outcome {
                Ok((_, lines)) => {
                    out.push_str(&format!("[{}] ok\n", t.task));
                    for l in lines {
                        out.push_str(&format!("  {l}\n"));
                    }
                }
                Err(e) => out.push_str(&format!("[{}] {e}\n", t.task)),
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => report.to_text(),
    }
}

/// Runs the tasks against the scenario in order.
pub fn run(scenario: &Scenario, tasks: &[Task]) -> Report {
    let mut ctx = Context { sc: scenario, bfv: None };
    let tasks = tasks.iter().map(|t| TaskReport { task: t.label(), outcome: ctx.run_task(t) }).collect();
    Report { scenario: scenario.name.clone(), tasks }
}

struct BfvState {
    j_hat: crate::graded::GradedOperator,
    lift_json: Value,
    lift_text: Vec<String>,
    omega: GradedSection,
    resolution: ContractionData<GradedSection>,
}

struct Context<'a> {
    sc: &'a Scenario,
    bfv: Option<std::rc::Rc<BfvState>>,
}

type TaskResult = CliResult<(Value, Vec<String>)>;

fn leaf_json(w: &LeafForm) -> Value {
    w.to_json()
}

fn kuranishi_json(kr: &KuranishiReport, chart: &Chart) -> (Value, Vec<String>) {
    let integrals: Vec<Value> = kr
        .integrals()
        .iter()
        .map(|(idx, ti)| json!({"leaf": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "value": format_torus_integral(ti, chart)}))
        .collect();
    let mut lines = vec![
        format!("class: {}", kr.class.format(chart)),
        format!("zero_mode: {}", kr.zero_mode.format(chart)),
        format!("two_pi_power: {}", kr.two_pi_power),
        format!("obstructed: {}", kr.obstructed()),
    ];
    for (idx, ti) in kr.integrals() {
        lines.push(format!("integral over leaf {:?}: {}", idx.iter().map(|i| i + 1).collect::<Vec<_>>(), format_torus_integral(&ti, chart)));
    }
    (
        json!({
            "class": leaf_json(&kr.class),
            "density": leaf_json(&kr.density),
            "zero_mode": leaf_json(&kr.zero_mode),
            "zero_mode_text": kr.zero_mode.format(chart),
            "two_pi_power": kr.two_pi_power,
            "obstructed": kr.obstructed(),
            "integrals": integrals,
        }),
        lines,
    )
}

fn section_text(w: &GradedSection, chart: &Chart) -> String {
    w.format(chart)
}

impl Context<'_> {
    fn jacobi(&self) -> CliResult<&MultiDerivation> {
        self.sc.jacobi.as_ref().ok_or_else(|| CliError::Validation("this task needs a Jacobi structure".into()))
    }

    fn section(&self) -> CliResult<&SectionOfNormalBundle> {
        self.sc.section.as_ref().ok_or_else(|| CliError::Validation("this task needs a `section` block".into()))
    }

    fn section_or_zero(&self) -> SectionOfNormalBundle {
        let (k, m) = self.sc.chart.dims();
        self.sc.section.clone().unwrap_or_else(|| SectionOfNormalBundle::zero(k, m))
    }

    fn linfty(&self) -> CliResult<LInfinity> {
        Ok(LInfinity::new(self.sc.chart.clone(), self.jacobi()?.clone())?)
    }

    fn generators(&self) -> Vec<Generator> {
        let (k, m) = self.sc.chart.dims();
        let mut gens: Vec<Generator> = (0..m).map(Generator::Dx).collect();
        for c in 0..k {
            let name = self.sc.chart.coord_name(c);
            gens.push(Generator::Function(parse_fn(&format!("exp(I*{name})"), &self.sc.chart).expect("coordinate exponential parses")));
        }
        if let Some(s) = &self.sc.section {
            gens.extend(s.components().iter().filter(|g| !g.is_zero()).cloned().map(Generator::Function));
        }
        gens
    }

    fn bfv_state(&mut self) -> CliResult<std::rc::Rc<BfvState>> {
        if let Some(s) = &self.bfv {
            return Ok(s.clone());
        }
        let j = self.jacobi()?;
        let (k, m) = self.sc.chart.dims();
        let lr = lift(j, self.sc.connection.clone(), m)?;
        let chart = &self.sc.chart;
        let mut comps = Map::new();
        let mut lines = Vec::new();
        for (key, op) in &lr.components_by_k {
            comps.insert(key.to_string(), op.to_json()?);
            lines.push(format!("J^_{key} = {}", op.format(chart)?));
        }
        lines.push(format!("corrections_added: {}", lr.corrections_added));
        let lift_json = json!({"components_by_k": comps, "corrections_added": lr.corrections_added, "fast_path": lr.fast_path});
        let omega = match brst_charge(&lr.j_hat, &SectionOfNormalBundle::zero(k, m))? {
            ChargeOutcome::Charge(c) => c.omega,
            ChargeOutcome::Obstructed { .. } => return Err(CliError::Validation("the zero section is not coisotropic".into())),
        };
        let samples = resolution_samples(GradedDims::new(k, m, m)?);
        let resolution = bfv_resolution(&lr.j_hat, &omega, &samples)?;
        let st = std::rc::Rc::new(BfvState { j_hat: lr.j_hat, lift_json, lift_text: lines, omega, resolution });
        self.bfv = Some(st.clone());
        Ok(st)
    }

    fn run_task(&mut self, task: &Task) -> TaskResult {
        let chart = self.sc.chart.clone();
        match task {
            Task::CheckJacobi => {
                let j = self.jacobi()?;
                let zero = j.is_jacobi();
                Ok((json!({"jacobiator_zero": zero, "structure": j.to_json()}), vec![format!("jacobiator_zero: {zero}")]))
            }
            Task::Coisotropic => {
                let s = self.section_or_zero();
                let rep = is_coisotropic_section(self.jacobi()?, &s)?;
                let mc_zero = self.linfty()?.mc_series(&s)?.is_zero();
                let residues: Vec<Value> =
                    rep.residues.iter().map(|((a, b), f)| json!({"pair": [a + 1, b + 1], "value": scalar_to_json(f)})).collect();
                let mut lines = vec![format!("coisotropic: {}", rep.coisotropic), format!("mc_series_zero: {mc_zero}")];
                for ((a, b), f) in &rep.residues {
                    lines.push(format!("residue ({}, {}): {}", a + 1, b + 1, crate::ring::format_fn(f, &chart)));
                }
                Ok((json!({"coisotropic": rep.coisotropic, "mc_series_zero": mc_zero, "residues": residues}), lines))
            }
            Task::Multibrackets { max_order } => self.multibrackets(*max_order),
            Task::Mc => {
                let w = self.linfty()?.mc_series(self.section()?)?;
                Ok((json!({"mc_series": leaf_json(&w), "vanishes": w.is_zero()}), vec![format!("MC(-s) = {}", w.format(&chart))]))
            }
            Task::Kuranishi => {
                let kr = self.linfty()?.kuranishi(self.section()?)?;
                Ok(kuranishi_json(&kr, &chart))
            }
            Task::Prolong { order } => {
                let n = order.unwrap_or(self.sc.formal_order);
                let pr = self.linfty()?.prolong_formal(self.section()?, n)?;
                let orders: Vec<Value> = pr
                    .reports
                    .iter()
                    .map(|r| {
                        json!({
                            "order": r.order_k,
                            "solved": r.solved,
                            "obstruction_zero_mode": leaf_json(&r.obstruction_zero_mode),
                            "two_pi_power": r.two_pi_power,
                        })
                    })
                    .collect();
                let coefficients: Vec<Value> = pr.coefficients.iter().map(|s| leaf_json(&s.to_leaf_form())).collect();
                let mut lines = vec![format!("obstructed_at: {}", pr.obstructed_at.map_or("none".into(), |o| o.to_string()))];
                for r in &pr.reports {
                    lines.push(format!("order {}: solved {}, obstruction zero mode {}", r.order_k, r.solved, r.obstruction_zero_mode.format(&chart)));
                }
                Ok((json!({"obstructed_at": pr.obstructed_at, "orders": orders, "coefficients": coefficients}), lines))
            }
            Task::TransversalCrosscheck => self.crosscheck(),
            Task::BfvLift => {
                let st = self.bfv_state()?;
                Ok((st.lift_json.clone(), st.lift_text.clone()))
            }
            Task::BrstCharge => {
                let st = self.bfv_state()?;
                match brst_charge(&st.j_hat, &self.section_or_zero())? {
                    ChargeOutcome::Charge(c) => {
                        let mut comps = Map::new();
                        let mut lines = vec!["status: charge".to_string()];
                        for (a, part) in &c.components_by_antighost {
                            comps.insert(a.to_string(), part.to_json());
                            lines.push(format!("Omega_{a} = {}", section_text(part, &chart)));
                        }
                        lines.push(format!("converged_at: {}", c.converged_at));
                        Ok((json!({"status": "charge", "components_by_antighost": comps, "converged_at": c.converged_at}), lines))
                    }
                    ChargeOutcome::Obstructed { residual } => Ok((
                        json!({"status": "obstructed", "residual": residual.to_json()}),
                        vec!["status: obstructed".into(), format!("residual: {}", section_text(&residual, &chart))],
                    )),
                }
            }
            Task::Dbfv => {
                let st = self.bfv_state()?;
                let op = d_bfv(&st.j_hat, &st.omega)?;
                let square_zero = op.bracket(&op).is_zero();
                Ok((
                    json!({"square_zero": square_zero, "operator": op.to_json()?}),
                    vec![format!("d_BFV = {}", op.format(&chart)?), format!("square_zero: {square_zero}")],
                ))
            }
            Task::BfvKuranishi => {
                let st = self.bfv_state()?;
                let s = self.section()?;
                let nu = bfv_lift_section(&st.resolution, s)?;
                let kr = bfv_kuranishi(&st.j_hat, &st.omega, &nu, &chart)?;
                let (mut v, mut lines) = kuranishi_json(&kr, &chart);
                v["nu"] = nu.to_json();
                lines.insert(0, format!("nu = {}", section_text(&nu, &chart)));
                Ok((v, lines))
            }
            Task::HplResolve => self.hpl_resolve(),
        }
    }

    fn multibrackets(&self, max_order: usize) -> TaskResult {
        let chart = &self.sc.chart;
        let (k, m) = chart.dims();
        if self.sc.jacobi.is_none() {
            let td = self.sc.transversal.as_ref().ok_or_else(|| CliError::Validation("no structure to evaluate".into()))?;
            let mut evals = Vec::new();
            let mut lines = Vec::new();
            for args in generator_tuples(&self.generators(), max_order.min(3)) {
                let v = td.multibracket(&args)?;
                lines.push(format!("m_{}({}) = {}", args.len(), generator_names(&args, chart).join(", "), v.format(chart)));
                evals.push(json!({"args": generator_names(&args, chart), "value": leaf_json(&v)}));
            }
            return Ok((json!({"engine": "transversal", "evaluations": evals}), lines));
        }
        let table = extract_multibrackets(self.jacobi()?)?;
        let l = self.linfty()?;
        let mut orders = Vec::new();
        let mut lines = vec![format!("fiber_degree: {}", table.fiber_degree()), format!("order_bound: {}", table.order_bound())];
        for n in 1..=max_order {
            let z = table.structurally_zero(n);
            orders.push(json!({"n": n, "structurally_zero": z}));
            lines.push(format!("m_{n} structurally zero: {z}"));
        }
        let mut evals = Vec::new();
        for args in generator_tuples(&self.generators(), max_order.min(2)) {
            let lf: Vec<LeafForm> = args.iter().map(|g| g.to_leaf_form(k, m)).collect();
            let v = l.bracket(&lf)?;
            if v.is_zero() {
                continue;
            }
            lines.push(format!("m_{}({}) = {}", args.len(), generator_names(&args, chart).join(", "), v.format(chart)));
            evals.push(json!({"args": generator_names(&args, chart), "value": leaf_json(&v)}));
        }
        Ok((
            json!({
                "engine": "table",
                "fiber_degree": table.fiber_degree(),
                "order_bound": table.order_bound(),
                "orders": orders,
                "evaluations": evals,
            }),
            lines,
        ))
    }

    fn crosscheck(&self) -> TaskResult {
        let chart = &self.sc.chart;
        let (k, m) = chart.dims();
        let td = self.sc.transversal.as_ref().ok_or_else(|| CliError::Validation("transversal-crosscheck needs transverse data".into()))?;
        let l = self.linfty()?;
        let mut checked = 0usize;
        let mut mismatches = Vec::new();
        for args in generator_tuples(&self.generators(), 3) {
            let lf: Vec<LeafForm> = args.iter().map(|g| g.to_leaf_form(k, m)).collect();
            let a = l.bracket(&lf)?;
            let b = td.multibracket(&args)?;
            checked += 1;
            if a != b {
                mismatches.push(json!({"args": generator_names(&args, chart), "table": leaf_json(&a), "transversal": leaf_json(&b)}));
            }
        }
        let agree = mismatches.is_empty();
        Ok((
            json!({"checked": checked, "agree": agree, "mismatches": mismatches}),
            vec![format!("checked: {checked}"), format!("agree: {agree}")],
        ))
    }

    fn hpl_resolve(&mut self) -> TaskResult {
        let st = self.bfv_state()?;
        let chart = self.sc.chart.clone();
        let (k, m) = chart.dims();
        let l = self.linfty()?;
        let samples = resolution_samples(GradedDims::new(k, m, m)?);
        let check = st.resolution.check(&samples)?;
        let mut lines = vec![format!("contraction_axioms: {}", check.all())];
        let mut matches = true;
        let mut checked = 0usize;
        let mut evals = Vec::new();
        for g in self.generators() {
            let w = g.to_leaf_form(k, m);
            let dprime = st.resolution.d_small(&leaf_to_ghost(&w)?)?;
            let expected = leaf_to_ghost(&l.m1(&w)?)?;
            checked += 1;
            matches &= dprime == expected;
            evals.push(json!({"arg": generator_names(std::slice::from_ref(&g), &chart)[0], "d_prime": dprime.to_json()}));
        }
        lines.push(format!("d_prime_matches_m1: {matches} ({checked} generators)"));
        Ok((json!({"contraction_axioms": check.all(), "d_prime_matches_m1": matches, "checked": checked, "evaluations": evals}), lines))
    }
}

fn generator_names(args: &[Generator], chart: &Chart) -> Vec<String> {
    args.iter()
        .map(|g| match g {
            Generator::Dx(i) => format!("dF x^{}", i + 1),
            Generator::Function(f) => crate::ring::format_fn(f, chart),
        })
        .collect()
}

/// Non-decreasing tuples of generators of length `1..=max`.
fn generator_tuples(gens: &[Generator], max: usize) -> Vec<Vec<Generator>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for t in &frontier {
            let start = t.last().copied().unwrap_or(0);
            for i in start..gens.len() {
                let mut v = t.clone();
                v.push(i);
                next.push(v);
            }
        }
        out.extend(next.iter().map(|t| t.iter().map(|&i| gens[i].clone()).collect()));
        frontier = next;
    }
    out
}

/// A fixed spread of graded sections over every ghost word.
pub fn resolution_samples(dims: GradedDims) -> Vec<GradedSection> {
    let (k, m) = (dims.k, dims.m);
    let mut out = Vec::new();
    for ghosts in 0u32..(1 << dims.r) {
        for antighosts in 0u32..(1 << dims.r) {
            let w = GhostWord { ghosts, antighosts };
            let a = (ghosts as usize + 2 * antighosts as usize) % m.max(1);
            let mut f = ScalarFn::fiber_var(k, m, a);
            if k > 0 {
                let c = (ghosts as usize + antighosts as usize) % k;
                f = &f + &(&ScalarFn::cos_coord(k, m, c) * &ScalarFn::fiber_var(k, m, (a + 1) % m));
            }
            let mut s = GradedSection::zero(dims);
            s.add_term(w, f);
            out.push(s);
        }
    }
    out
}

/// The tasks to run: explicit ones, else the scenario's defaults.
pub fn select_tasks(scenario: &Scenario, explicit: &[String]) -> CliResult<Vec<Task>> {
    let names: &[String] = if explicit.is_empty() { &scenario.default_tasks } else { explicit };
    if names.is_empty() {
        return Err(CliError::Usage("no task given".into()));
    }
    names.iter().map(|n| Task::parse(n)).collect()
}

/// Reads a scenario from a path or a built-in name.
pub fn read_scenario_source(arg: &str) -> CliResult<String> {
    match std::fs::read_to_string(arg) {
        Ok(s) => Ok(s),
        Err(e) => builtin(arg).map(str::to_string).ok_or_else(|| CliError::Usage(format!("cannot read scenario `{arg}`: {e}"))),
    }
}

/// Omega_E of a section in JSON, for scripting against the BFV tasks.
pub fn omega_json(s: &SectionOfNormalBundle) -> CliResult<Value> {
    Ok(omega_e(s)?.to_json())
}

/// All task labels keyed by name, for usage text.
pub fn task_help() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("check-jacobi", "Jacobiator of the structure"),
        ("coisotropic", "coisotropy of the section (zero section by default)"),
        ("multibrackets[:K]", "multibracket orders up to K (default 4)"),
        ("mc", "Maurer-Cartan series of the section"),
        ("kuranishi", "Kuranishi class and leaf zero mode of the section"),
        ("prolong[:N]", "formal prolongation up to order N"),
        ("transversal-crosscheck", "table engine against the transversal engine"),
        ("bfv-lift", "graded lift of the structure"),
        ("brst-charge", "BRST charge of the section (zero section by default)"),
        ("dbfv", "BFV differential and its square"),
        ("bfv-kuranishi", "Kuranishi class through the BFV complex"),
        ("hpl-resolve", "perturbed contraction onto the leafwise complex"),
    ])
}
