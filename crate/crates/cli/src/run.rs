//! Scenario drivers. Every engine answer is checked against an exact oracle
//! computed independently from rational inputs.

use std::time::Instant;

use formulads_core::corpus::random_inputs;
use formulads_core::formula::{random_formula, Formula, GenParams};
use formulads_core::matrix::Matrix;
use formulads_core::oracle::{
    det_bareiss, eval_exact, inversion_inputs, max_matching_bruteforce, rank_mod_p, rational_mod_p,
    Graph, RatMatrix,
};
use formulads_core::scalar::{ln_abs_rational, FixedRing, FloatRing, PrimeField, RationalRing};
use formulads_core::{
    DetTracker, EngineKind, FormulaMaintainer, GraphUpdate, RankState, RealField, TutteState,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{RingChoice, Scenario, ScenarioConfig};
use crate::report::{Record, Report};
use crate::CliError;

/// Attempts per draw before a configuration is declared unsatisfiable.
const MAX_ATTEMPTS: usize = 1000;

/// One entry update of a named input, with the exact value after it.
#[derive(Debug, Clone)]
pub struct Step {
    pub name: String,
    pub i: usize,
    pub j: usize,
    pub old: BigRational,
    pub new: BigRational,
    pub value: RatMatrix,
}

impl Step {
    pub fn delta(&self) -> BigRational {
        &self.new - &self.old
    }

    fn label(&self) -> String {
        format!("{}[{},{}] += {}", self.name, self.i, self.j, self.delta())
    }
}

/// A formula, its per-leaf inputs and a checked update sequence.
#[derive(Debug, Clone)]
pub struct Plan {
    pub formula: Formula,
    pub inputs: Vec<RatMatrix>,
    /// The exact value before any update.
    pub value: RatMatrix,
    pub steps: Vec<Step>,
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn parse_formula(text: &str) -> Result<Formula, CliError> {
    Formula::parse(text).map_err(|e| CliError::Config(format!("formula: {e}")))
}

/// The configured formula, or `default(n)` when only `n` is set.
fn chosen_formula(
    cfg: &ScenarioConfig,
    default: fn(usize) -> String,
) -> Result<Option<Formula>, CliError> {
    match (&cfg.formula, cfg.n) {
        (Some(text), _) => parse_formula(text).map(Some),
        (None, Some(n)) => parse_formula(&default(n)).map(Some),
        (None, None) => Ok(None),
    }
}

fn dense_inputs(rng: &mut ChaCha8Rng, f: &Formula, cfg: &ScenarioConfig) -> Vec<RatMatrix> {
    let mut inputs = random_inputs(rng, f, cfg.bound);
    if cfg.dominant {
        for m in inputs.iter_mut().filter(|m| m.is_square()) {
            let boost = q(cfg.bound * m.rows() as i64 + 1);
            for d in 0..m.rows() {
                m[(d, d)] += &boost;
            }
        }
    }
    inputs
}

/// Draws a formula and inputs whose value passes `accept`.
fn draw_instance(
    rng: &mut ChaCha8Rng,
    cfg: &ScenarioConfig,
    fixed: Option<Formula>,
    inputs: fn(&mut ChaCha8Rng, &Formula, &ScenarioConfig) -> Vec<RatMatrix>,
    accept: &dyn Fn(&Formula, &[RatMatrix], &RatMatrix) -> bool,
) -> Result<(Formula, Vec<RatMatrix>, RatMatrix), CliError> {
    let params = GenParams {
        max_gates: cfg.s_max,
        max_dim: cfg.dim_max,
        ..GenParams::default()
    };
    for _ in 0..MAX_ATTEMPTS {
        let f = fixed.clone().unwrap_or_else(|| random_formula(rng, params));
        let ins = inputs(rng, &f, cfg);
        if let Ok(v) = eval_exact(&f, &ins) {
            if accept(&f, &ins, &v) {
                return Ok((f, ins, v));
            }
        }
    }
    Err(CliError::Config(
        "could not draw an admissible instance".into(),
    ))
}

/// `t` updates, each setting one entry of one named input to
/// `draw(rng, old)`, kept only if the new value passes `accept`.
fn plan_updates(
    rng: &mut ChaCha8Rng,
    (formula, inputs, value): (Formula, Vec<RatMatrix>, RatMatrix),
    t: usize,
    draw: &dyn Fn(&mut ChaCha8Rng, &BigRational) -> BigRational,
    accept: &dyn Fn(&Formula, &[RatMatrix], &RatMatrix) -> bool,
) -> Result<Plan, CliError> {
    let leaves = formula.leaves();
    let mut names: Vec<(String, (usize, usize))> =
        leaves.iter().map(|l| (l.name.clone(), l.shape)).collect();
    names.sort();
    names.dedup();
    let mut current = inputs.clone();
    let mut steps = Vec::with_capacity(t);
    for _ in 0..t {
        let mut found = None;
        for _ in 0..MAX_ATTEMPTS {
            let (name, (r, c)) = &names[rng.random_range(0..names.len())];
            let (i, j) = (rng.random_range(0..*r), rng.random_range(0..*c));
            let first = leaves
                .iter()
                .find(|l| &l.name == name)
                .expect("name comes from the leaves")
                .id;
            let old = current[first][(i, j)].clone();
            let new = draw(rng, &old);
            let mut next = current.clone();
            for l in leaves.iter().filter(|l| &l.name == name) {
                next[l.id][(i, j)] = new.clone();
            }
            if let Ok(value) = eval_exact(&formula, &next) {
                if accept(&formula, &next, &value) {
                    found = Some((
                        Step {
                            name: name.clone(),
                            i,
                            j,
                            old,
                            new,
                            value,
                        },
                        next,
                    ));
                    break;
                }
            }
        }
        let (step, next) =
            found.ok_or_else(|| CliError::Config("could not draw an admissible update".into()))?;
        steps.push(step);
        current = next;
    }
    Ok(Plan {
        formula,
        inputs,
        value,
        steps,
    })
}

fn nonzero_delta(bound: i64) -> impl Fn(&mut ChaCha8Rng, &BigRational) -> BigRational {
    move |rng, old| {
        let d = rng.random_range(1..=bound);
        old + q(if rng.random_bool(0.5) { d } else { -d })
    }
}

/// The plan for `maintain` and `bits-sweep`.
pub fn maintain_plan(cfg: &ScenarioConfig) -> Result<Plan, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
    let fixed = chosen_formula(cfg, |n| format!("A:{n}x{n}; inv(A)"))?;
    let any = |_: &Formula, _: &[RatMatrix], _: &RatMatrix| true;
    let instance = draw_instance(&mut rng, cfg, fixed, dense_inputs, &any)?;
    plan_updates(&mut rng, instance, cfg.t, &nonzero_delta(cfg.bound), &any)
}

fn invertible(_: &Formula, _: &[RatMatrix], v: &RatMatrix) -> bool {
    v.is_square() && !det_bareiss(v).is_zero()
}

/// The plan for `determinant`: square output, nonzero determinant throughout.
pub fn determinant_plan(cfg: &ScenarioConfig) -> Result<Plan, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
    let fixed = chosen_formula(cfg, |n| format!("A:{n}x{n}; A"))?;
    let instance = draw_instance(&mut rng, cfg, fixed, dense_inputs, &invertible)?;
    plan_updates(
        &mut rng,
        instance,
        cfg.t,
        &nonzero_delta(cfg.bound),
        &invertible,
    )
}

fn sparse_inputs(rng: &mut ChaCha8Rng, f: &Formula, cfg: &ScenarioConfig) -> Vec<RatMatrix> {
    let mut inputs = random_inputs(rng, f, cfg.bound);
    // Zero out a random half of each named input, identically across copies.
    let leaves = f.leaves();
    for (name, &(r, c)) in &f.dims {
        let mask: Vec<bool> = (0..r * c).map(|_| rng.random_bool(0.5)).collect();
        for l in leaves.iter().filter(|l| &l.name == name) {
            for (k, &z) in mask.iter().enumerate() {
                if z {
                    inputs[l.id][(k / c, k % c)] = BigRational::zero();
                }
            }
        }
    }
    inputs
}

fn residues(v: &RatMatrix, p: u64) -> Option<Vec<Vec<u64>>> {
    (0..v.rows())
        .map(|i| v.row(i).iter().map(|x| rational_mod_p(x, p)).collect())
        .collect()
}

/// The plan for `rank`: square output, every value and inversion defined mod `p`.
pub fn rank_plan(cfg: &ScenarioConfig) -> Result<Plan, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
    let p = cfg.p;
    let fixed = chosen_formula(cfg, |n| format!("A:{n}x{n}; A"))?;
    let accept = move |f: &Formula, ins: &[RatMatrix], v: &RatMatrix| {
        v.is_square()
            && residues(v, p).is_some()
            && inversion_inputs(f, ins).is_ok_and(|bs| {
                bs.iter()
                    .all(|b| residues(b, p).is_some_and(|rows| rank_mod_p(&rows, p) == b.rows()))
            })
    };
    let instance = draw_instance(&mut rng, cfg, fixed, sparse_inputs, &accept)?;
    let bound = cfg.bound;
    let draw = move |rng: &mut ChaCha8Rng, _: &BigRational| {
        if rng.random_bool(0.6) {
            BigRational::zero()
        } else {
            q(rng.random_range(-bound..=bound))
        }
    };
    plan_updates(&mut rng, instance, cfg.t, &draw, &accept)
}

fn convert<F: RealField>(
    field: &F,
    inputs: &[RatMatrix],
) -> Result<Vec<Matrix<F::Elem>>, CliError> {
    inputs
        .iter()
        .map(|m| {
            m.try_map(|x| field.from_rational(x))
                .map_err(CliError::from)
        })
        .collect()
}

/// Largest absolute entry error and the same relative to the largest exact entry.
fn matrix_error<F: RealField>(field: &F, got: &Matrix<F::Elem>, want: &RatMatrix) -> (f64, f64) {
    let mut abs = BigRational::zero();
    let mut scale = BigRational::zero();
    for (g, w) in got.as_slice().iter().zip(want.as_slice()) {
        abs = abs.max((field.to_rational(g) - w).abs());
        scale = scale.max(w.abs());
    }
    let abs = abs.to_f64().unwrap_or(f64::MAX);
    let scale = scale.to_f64().unwrap_or(f64::MAX);
    (abs, if scale > 0.0 { abs / scale } else { abs })
}

fn matrix_text(m: &Matrix<f64>) -> String {
    let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    serde_json::to_string(&rows).expect("plain numbers")
}

/// Per-update records of one maintainer run, plus the error of the value
/// before any update.
pub struct Trace {
    pub initial_error: f64,
    pub records: Vec<Record>,
}

pub fn maintain_trace<F: RealField>(
    field: &F,
    plan: &Plan,
    kind: EngineKind,
    eps: f64,
) -> Result<Trace, CliError> {
    let inputs = convert(field, &plan.inputs)?;
    let t = plan.steps.len().max(1);
    let mut m =
        FormulaMaintainer::new(field, &plan.formula, &inputs, kind, eps / (2.0 * t as f64))?;
    let initial_error = matrix_error(field, &m.value(), &plan.value).0;
    let mut records = Vec::with_capacity(plan.steps.len());
    for (k, s) in plan.steps.iter().enumerate() {
        let start = Instant::now();
        m.update_input(&s.name, s.i, s.j, &field.from_rational(&s.delta())?)?;
        let got = m.value();
        let micros = start.elapsed().as_secs_f64() * 1e6;
        let (abs, rel) = matrix_error(field, &got, &s.value);
        records.push(Record {
            step: k,
            op: s.label(),
            answer: matrix_text(&got.map(|x| field.to_f64(x))),
            oracle: matrix_text(&s.value.map(|x| x.to_f64().unwrap_or(f64::NAN))),
            abs_error: abs,
            rel_error: rel,
            ledger: Some(m.snapshot().ledger),
            bits: None,
            rank: None,
            pass: abs <= eps,
            micros,
        });
    }
    Ok(Trace {
        initial_error,
        records,
    })
}

fn maintain_records(
    ring: RingChoice,
    plan: &Plan,
    kind: EngineKind,
    eps: f64,
) -> Result<Trace, CliError> {
    match ring {
        RingChoice::Rational => maintain_trace(&RationalRing, plan, kind, eps),
        RingChoice::Float64 => maintain_trace(&FloatRing::<f64>::new(), plan, kind, eps),
        RingChoice::Fixed(b) => maintain_trace(&FixedRing::new(b), plan, kind, eps),
    }
}

pub fn determinant_records<F: RealField>(
    field: &F,
    plan: &Plan,
    kind: EngineKind,
    eps: f64,
) -> Result<Vec<Record>, CliError> {
    let inputs = convert(field, &plan.inputs)?;
    let mut tr = DetTracker::new(
        field,
        &plan.formula,
        &inputs,
        kind,
        eps,
        plan.steps.len().max(1),
    )?;
    let mut records = Vec::with_capacity(plan.steps.len());
    for (k, s) in plan.steps.iter().enumerate() {
        let start = Instant::now();
        let got = tr.update_input(&s.name, s.i, s.j, &field.from_rational(&s.delta())?)?;
        let micros = start.elapsed().as_secs_f64() * 1e6;
        let want = det_bareiss(&s.value);
        let want_sign = if want.is_positive() { 1 } else { -1 };
        let rel = if i32::from(got.sign) == want_sign {
            (got.log_abs - ln_abs_rational(&want)).exp_m1().abs()
        } else {
            // Wrong sign: no multiplicative error is small enough.
            f64::MAX
        };
        let want_f = want.to_f64().unwrap_or(f64::NAN);
        records.push(Record {
            step: k,
            op: s.label(),
            answer: format!("{:e}", got.to_f64()),
            oracle: want.to_string(),
            abs_error: (got.to_f64() - want_f).abs(),
            rel_error: rel,
            ledger: Some(tr.snapshot().engine_hat.ledger),
            bits: None,
            rank: None,
            pass: rel <= eps,
            micros,
        });
    }
    Ok(records)
}

pub fn rank_records(plan: &Plan, p: u64, seed: u64) -> Result<Vec<Record>, CliError> {
    let field = PrimeField::new(p)?;
    let inputs = plan
        .inputs
        .iter()
        .map(|m| m.try_map(|x| formulads_core::Field::from_rational(&field, x)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut st = RankState::new(&field, &plan.formula, &inputs, seed)?;
    let mut records = Vec::with_capacity(plan.steps.len());
    for (k, s) in plan.steps.iter().enumerate() {
        let value = formulads_core::Field::from_rational(&field, &s.new)?;
        let start = Instant::now();
        let got = st.update_input(&s.name, s.i, s.j, &value)?;
        let micros = start.elapsed().as_secs_f64() * 1e6;
        let rows = residues(&s.value, p).expect("plan keeps values defined mod p");
        let want = rank_mod_p(&rows, p);
        let abs = got.abs_diff(want) as f64;
        records.push(Record {
            step: k,
            op: format!("{}[{},{}] = {}", s.name, s.i, s.j, s.new),
            answer: got.to_string(),
            oracle: want.to_string(),
            abs_error: abs,
            rel_error: abs / want.max(1) as f64,
            ledger: None,
            bits: None,
            rank: Some(got),
            pass: got == want,
            micros,
        });
    }
    Ok(records)
}

fn apply_to_graph(g: &mut Graph, op: GraphUpdate) {
    match op {
        GraphUpdate::Insert { u, v } => g.insert(u, v),
        GraphUpdate::Remove { u, v } => g.remove(u, v),
        GraphUpdate::On { v } => g.set_active(v, true),
        GraphUpdate::Off { v } => g.set_active(v, false),
        GraphUpdate::Merge { u, v } => g.merge(u, v),
    }
}

/// `t` random graph updates on `n` vertices, each checked against a
/// brute-force matching of an independently maintained graph.
pub fn matching_records(n: usize, t: usize, p: u64, seed: u64) -> Result<Vec<Record>, CliError> {
    let mut st = TutteState::new(n, p, seed)?;
    let mut g = Graph::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut records = Vec::with_capacity(t);
    for k in 0..t {
        let op = st.random_update(&mut rng);
        let start = Instant::now();
        let got = st.apply(op)?;
        let micros = start.elapsed().as_secs_f64() * 1e6;
        apply_to_graph(&mut g, op);
        let want = max_matching_bruteforce(&g)?;
        let tutte = st.tutte_rank();
        let abs = got.abs_diff(want) as f64;
        records.push(Record {
            step: k,
            op: op.to_string(),
            answer: got.to_string(),
            oracle: want.to_string(),
            abs_error: abs,
            rel_error: abs / want.max(1) as f64,
            ledger: None,
            bits: None,
            rank: Some(tutte),
            pass: got == want && tutte % 2 == 0,
            micros,
        });
    }
    Ok(records)
}

/// One fixed-point maintain run per entry of `b_list` on the same plan.
/// Record `k` carries the largest error (initial value included) at
/// `b_list[k]` bits and passes when that error does not exceed the previous one.
pub fn bits_sweep(cfg: &ScenarioConfig, b_list: &[u32]) -> Result<Report, CliError> {
    let seed = cfg.seed()?;
    if b_list.is_empty() || b_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(
            "bits must be non-empty and strictly ascending".into(),
        ));
    }
    let plan = maintain_plan(cfg)?;
    let mut records: Vec<Record> = Vec::with_capacity(b_list.len());
    for (k, &b) in b_list.iter().enumerate() {
        let start = Instant::now();
        let trace = maintain_trace(&FixedRing::new(b), &plan, cfg.engine, cfg.eps)?;
        let micros = start.elapsed().as_secs_f64() * 1e6;
        let err = trace
            .records
            .iter()
            .map(|r| r.abs_error)
            .fold(trace.initial_error, f64::max);
        let rel = trace
            .records
            .iter()
            .map(|r| r.rel_error)
            .fold(0.0, f64::max);
        let pass = records.last().is_none_or(|prev| err <= prev.abs_error);
        records.push(Record {
            step: k,
            op: format!("fixed({b})"),
            answer: format!("{err:e}"),
            oracle: "0".into(),
            abs_error: err,
            rel_error: rel,
            ledger: trace.records.last().and_then(|r| r.ledger),
            bits: Some(b),
            rank: None,
            pass,
            micros,
        });
    }
    Ok(Report::new(Scenario::BitsSweep, seed, cfg.eps, records))
}

/// Runs the configured scenario. Deterministic in the seed apart from timings.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let scenario = cfg.scenario()?;
    let seed = cfg.seed()?;
    let records = match scenario {
        Scenario::Maintain => {
            maintain_records(cfg.ring, &maintain_plan(cfg)?, cfg.engine, cfg.eps)?.records
        }
        Scenario::Determinant => {
            let plan = determinant_plan(cfg)?;
            match cfg.ring {
                RingChoice::Rational => {
                    determinant_records(&RationalRing, &plan, cfg.engine, cfg.eps)?
                }
                RingChoice::Float64 => {
                    determinant_records(&FloatRing::<f64>::new(), &plan, cfg.engine, cfg.eps)?
                }
                RingChoice::Fixed(b) => {
                    determinant_records(&FixedRing::new(b), &plan, cfg.engine, cfg.eps)?
                }
            }
        }
        Scenario::Rank => rank_records(&rank_plan(cfg)?, cfg.p, seed)?,
        Scenario::Matching => matching_records(cfg.n.expect("validated"), cfg.t, cfg.p, seed)?,
        Scenario::BitsSweep => return bits_sweep(cfg, &cfg.bits),
    };
    Ok(Report::new(scenario, seed, cfg.eps, records))
}
