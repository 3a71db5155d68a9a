//! Alternating reversible evolution and record formation.
//!
//! A [`ProcessSchedule`] starts from a configuration and folds a list of
//! steps: a reversible step multiplies the amplitude vector by a unitary, a
//! record event picks one column of its basis. The chosen outcome `k` has
//! normalized weight
//!
//! ```text
//! w_k = |β_k|^p / Σ_j |β_j|^p,    β = basis^H · α
//! ```
//!
//! and evolution continues from that basis column. Weights are renormalized
//! per event for every `p`, so the simulator runs for any candidate exponent;
//! whether the candidate conserves total weight is measured separately by
//! [`total_weight_drift`].
//!
//! Multiplying the per-stage weights along a path reproduces the analytic
//! path weight for every `p` ([`refinement_consistency`]). Composition of
//! refinements therefore does not single out `p = 2`; conservation under
//! reversible steps does.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::amplitude::{Amplitude, Configuration, Unitary, WeightFunction};
use crate::error::{Error, Result};

/// Expected counts below this are pooled before the chi-square test.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;
/// Smallest trial count accepted by [`born_frequency_test`].
pub const MIN_FREQUENCY_TRIALS: u64 = 1_000;

/// Record formation in the basis given by the columns of `basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordEvent {
    basis: Unitary,
    stage_label: String,
}

impl RecordEvent {
    pub fn new(basis: Unitary, stage_label: impl Into<String>) -> Self {
        RecordEvent {
            basis,
            stage_label: stage_label.into(),
        }
    }

    /// Record in the standard basis.
    pub fn standard(n: usize, stage_label: impl Into<String>) -> Self {
        Self::new(Unitary::identity(n), stage_label)
    }

    pub fn basis(&self) -> &Unitary {
        &self.basis
    }

    pub fn stage_label(&self) -> &str {
        &self.stage_label
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Reversible(Unitary),
    Record(RecordEvent),
}

impl Step {
    fn dim(&self) -> usize {
        match self {
            Step::Reversible(u) => u.dim(),
            Step::Record(e) => e.basis.dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSchedule {
    initial: Configuration,
    steps: Vec<Step>,
}

impl ProcessSchedule {
    /// Checks dimensions and that stage labels are non-empty and distinct.
    pub fn new(initial: Configuration, steps: Vec<Step>) -> Result<Self> {
        let n = initial.len();
        let mut labels: Vec<&str> = Vec::new();
        for step in &steps {
            if step.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: step.dim(),
                });
            }
            if let Step::Record(e) = step {
                if e.stage_label.is_empty() {
                    return Err(Error::InvalidSchedule("empty stage label".into()));
                }
                if labels.contains(&e.stage_label.as_str()) {
                    return Err(Error::InvalidSchedule(format!(
                        "duplicate stage label {:?}",
                        e.stage_label
                    )));
                }
                labels.push(&e.stage_label);
            }
        }
        Ok(ProcessSchedule { initial, steps })
    }

    pub fn builder(initial: Configuration) -> ScheduleBuilder {
        ScheduleBuilder {
            initial,
            steps: Vec::new(),
        }
    }

    pub fn initial(&self) -> &Configuration {
        &self.initial
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn record_events(&self) -> impl Iterator<Item = &RecordEvent> {
        self.steps.iter().filter_map(|s| match s {
            Step::Record(e) => Some(e),
            Step::Reversible(_) => None,
        })
    }

    pub fn record_count(&self) -> usize {
        self.record_events().count()
    }

    /// Report key for a sequence of outcome indices, e.g. `"r1:0>r2:1"`.
    pub fn outcome_key(&self, outcomes: &[usize]) -> String {
        self.record_events()
            .zip(outcomes)
            .map(|(e, k)| format!("{}:{}", e.stage_label, k))
            .collect::<Vec<_>>()
            .join(">")
    }
}

pub struct ScheduleBuilder {
    initial: Configuration,
    steps: Vec<Step>,
}

impl ScheduleBuilder {
    pub fn evolve(mut self, u: Unitary) -> Self {
        self.steps.push(Step::Reversible(u));
        self
    }

    pub fn record(mut self, basis: Unitary, stage_label: impl Into<String>) -> Self {
        self.steps.push(Step::Record(RecordEvent::new(basis, stage_label)));
        self
    }

    /// Record in the standard basis.
    pub fn record_standard(self, stage_label: impl Into<String>) -> Self {
        let n = self.initial.len();
        self.record(Unitary::identity(n), stage_label)
    }

    pub fn build(self) -> Result<ProcessSchedule> {
        ProcessSchedule::new(self.initial, self.steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub outcome_index: usize,
    pub stage_label: String,
    /// Normalized weight of the realized outcome, in `[0, 1]`.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub records: Vec<Record>,
    /// Product of the per-record weights.
    pub joint_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    /// Observed count per outcome sequence; every expected sequence is present.
    pub counts: BTreeMap<String, u64>,
    pub trials: u64,
    /// Path weight per outcome sequence; sums to one.
    pub expected: BTreeMap<String, f64>,
    pub chi_square: f64,
    pub p_value: f64,
    pub degrees_of_freedom: usize,
    /// Sequences merged into a single cell because their expected count was
    /// below [`MIN_EXPECTED_COUNT`].
    pub pooled_cells: Vec<String>,
}

fn check_exponent(p: f64) -> Result<WeightFunction> {
    WeightFunction::new(p)
}

/// Normalized outcome weights `|β_k|^p / Σ_j |β_j|^p` with `β = basis^H α`.
pub fn record_weights(configuration: &Configuration, event: &RecordEvent, p: f64) -> Result<Vec<f64>> {
    let wf = check_exponent(p)?;
    weights_in_basis(configuration, &event.basis, &wf)
}

fn weights_in_basis(configuration: &Configuration, basis: &Unitary, wf: &WeightFunction) -> Result<Vec<f64>> {
    let n = configuration.len();
    if basis.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: n,
        });
    }
    let b = basis.matrix();
    let amps = configuration.amplitudes();
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let beta: Complex64 = (0..n).map(|j| b[(j, k)].conj() * amps[j].to_complex()).sum();
        weights.push(wf.weight_of_magnitude(beta.norm()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroWeight);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

fn basis_column(configuration: &Configuration, basis: &Unitary, k: usize) -> Result<Configuration> {
    let column = basis.matrix().column(k).iter().map(|&z| Amplitude::from(z)).collect();
    configuration.relabel(column)
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        cumulative += w;
        if u < cumulative {
            return k;
        }
    }
    // Roundoff left the cumulative sum just below u.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Samples one outcome and returns the record with the post-record
/// configuration (the selected basis column).
pub fn form_record<R: Rng + ?Sized>(
    configuration: &Configuration,
    event: &RecordEvent,
    p: f64,
    rng: &mut R,
) -> Result<(Record, Configuration)> {
    let weights = record_weights(configuration, event, p)?;
    let k = sample_index(&weights, rng);
    let post = basis_column(configuration, &event.basis, k)?;
    Ok((
        Record {
            outcome_index: k,
            stage_label: event.stage_label.clone(),
            weight: weights[k],
        },
        post,
    ))
}

/// Folds the schedule, asking `choose` for the outcome at each record and
/// reporting `(record ordinal, outcome, weight)` to `on_record`.
fn walk<C, O>(schedule: &ProcessSchedule, wf: &WeightFunction, mut choose: C, mut on_record: O) -> Result<f64>
where
    C: FnMut(usize, &[f64]) -> Result<usize>,
    O: FnMut(usize, &RecordEvent, usize, f64),
{
    let mut current = schedule.initial.clone();
    let mut joint = 1.0;
    let mut ordinal = 0;
    for step in &schedule.steps {
        match step {
            Step::Reversible(u) => current = u.apply(&current)?,
            Step::Record(event) => {
                let weights = weights_in_basis(&current, &event.basis, wf)?;
                let k = choose(ordinal, &weights)?;
                joint *= weights[k];
                on_record(ordinal, event, k, weights[k]);
                current = basis_column(&current, &event.basis, k)?;
                ordinal += 1;
            }
        }
    }
    Ok(joint)
}

/// One sampled realization of the schedule.
pub fn run_trajectory<R: Rng + ?Sized>(schedule: &ProcessSchedule, p: f64, rng: &mut R) -> Result<TrajectoryResult> {
    let wf = check_exponent(p)?;
    let mut records = Vec::with_capacity(schedule.record_count());
    let joint_weight = walk(
        schedule,
        &wf,
        |_, w| Ok(sample_index(w, rng)),
        |_, event, k, weight| {
            records.push(Record {
                outcome_index: k,
                stage_label: event.stage_label.clone(),
                weight,
            })
        },
    )?;
    Ok(TrajectoryResult { records, joint_weight })
}

/// The trajectory that realizes the given outcome sequence.
pub fn run_forced_trajectory(schedule: &ProcessSchedule, p: f64, outcomes: &[usize]) -> Result<TrajectoryResult> {
    let wf = check_exponent(p)?;
    if outcomes.len() != schedule.record_count() {
        return Err(Error::InvalidSchedule(format!(
            "{} outcomes given for {} record events",
            outcomes.len(),
            schedule.record_count()
        )));
    }
    let n = schedule.dim();
    let mut records = Vec::with_capacity(outcomes.len());
    let joint_weight = walk(
        schedule,
        &wf,
        |ordinal, _| {
            let k = outcomes[ordinal];
            if k >= n {
                return Err(Error::InvalidArgument(format!("outcome {k} out of range for n = {n}")));
            }
            Ok(k)
        },
        |_, event, k, weight| {
            records.push(Record {
                outcome_index: k,
                stage_label: event.stage_label.clone(),
                weight,
            })
        },
    )?;
    Ok(TrajectoryResult { records, joint_weight })
}

/// Path weights of every outcome sequence with non-zero weight, by
/// exhaustive enumeration. Keys are outcome index sequences.
pub fn enumerate_paths(schedule: &ProcessSchedule, p: f64) -> Result<BTreeMap<Vec<usize>, f64>> {
    let wf = check_exponent(p)?;
    let mut out = BTreeMap::new();
    let mut path = Vec::new();
    descend(schedule, &wf, 0, schedule.initial.clone(), 1.0, &mut path, &mut out)?;
    Ok(out)
}

fn descend(
    schedule: &ProcessSchedule,
    wf: &WeightFunction,
    from: usize,
    mut current: Configuration,
    weight: f64,
    path: &mut Vec<usize>,
    out: &mut BTreeMap<Vec<usize>, f64>,
) -> Result<()> {
    for (offset, step) in schedule.steps[from..].iter().enumerate() {
        match step {
            Step::Reversible(u) => current = u.apply(&current)?,
            Step::Record(event) => {
                let weights = weights_in_basis(&current, &event.basis, wf)?;
                for (k, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    path.push(k);
                    let next = basis_column(&current, &event.basis, k)?;
                    descend(schedule, wf, from + offset + 1, next, weight * w, path, out)?;
                    path.pop();
                }
                return Ok(());
            }
        }
    }
    out.insert(path.clone(), weight);
    Ok(())
}

/// Max over outcome pairs of |trajectory joint weight − analytic path
/// weight| for a schedule with exactly two record events.
///
/// The analytic route composes the reversible steps into `U` (before the
/// first record) and `V` (between records) and reads
/// `w_i = |(B1^H U α)_i|^p / Σ` and `w_{j|i} = |(B2^H V B1)_{ji}|^p / Σ_j`.
/// The residual is at roundoff level for every `p`.
pub fn refinement_consistency(schedule: &ProcessSchedule, p: f64) -> Result<f64> {
    let wf = check_exponent(p)?;
    let events: Vec<&RecordEvent> = schedule.record_events().collect();
    if events.len() != 2 {
        return Err(Error::InvalidSchedule(format!(
            "refinement check needs exactly 2 record events, found {}",
            events.len()
        )));
    }
    let n = schedule.dim();
    let mut before = DMatrix::<Complex64>::identity(n, n);
    let mut between = DMatrix::<Complex64>::identity(n, n);
    let mut seen = 0;
    for step in &schedule.steps {
        match step {
            Step::Reversible(u) if seen == 0 => before = u.matrix() * before,
            Step::Reversible(u) if seen == 1 => between = u.matrix() * between,
            Step::Reversible(_) => {}
            Step::Record(_) => seen += 1,
        }
    }
    let b1 = events[0].basis.matrix();
    let b2 = events[1].basis.matrix();
    let alpha = nalgebra::DVector::from_vec(schedule.initial.to_complex());

    let normalize = |v: Vec<f64>| {
        let total: f64 = v.iter().sum();
        v.into_iter().map(|w| w / total).collect::<Vec<f64>>()
    };
    let beta = b1.adjoint() * &before * alpha;
    let stage1 = normalize(beta.iter().map(|z| wf.weight_of_magnitude(z.norm())).collect());
    let transfer = b2.adjoint() * &between * b1;

    let mut worst: f64 = 0.0;
    for (i, &w1) in stage1.iter().enumerate() {
        let stage2 = normalize(transfer.column(i).iter().map(|z| wf.weight_of_magnitude(z.norm())).collect());
        for (j, &w2) in stage2.iter().enumerate() {
            let analytic = w1 * w2;
            let simulated = run_forced_trajectory(schedule, p, &[i, j])?.joint_weight;
            worst = worst.max((simulated - analytic).abs());
        }
    }
    Ok(worst)
}

/// `|Σ|(Uc)_i|^p − Σ|c_i|^p| / Σ|c_i|^p`.
pub fn weight_drift(u: &Unitary, configuration: &Configuration, p: f64) -> Result<f64> {
    let wf = check_exponent(p)?;
    let before = wf.total_weight(configuration)?;
    let after = wf.total_weight(&u.apply(configuration)?)?;
    Ok((after - before).abs() / before)
}

/// Max relative drift of the total p-weight over `num_unitaries` random
/// Haar unitaries, each applied to a fresh complex-Gaussian configuration.
pub fn total_weight_drift<R: Rng + ?Sized>(n: usize, p: f64, num_unitaries: usize, rng: &mut R) -> Result<f64> {
    check_exponent(p)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {n}")));
    }
    if num_unitaries == 0 {
        return Err(Error::InvalidArgument("need at least one unitary".into()));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..num_unitaries {
        let u = Unitary::haar(n, rng);
        let c = Configuration::random(n, rng)?;
        worst = worst.max(weight_drift(&u, &c, p)?);
    }
    Ok(worst)
}

/// Generator for trial `trial` under `seed`: one ChaCha stream per trial,
/// so results do not depend on how trials are scheduled.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` independent trajectories, tallies outcome sequences, and
/// tests them against the enumerated path weights with Pearson's
/// chi-square.
pub fn born_frequency_test(schedule: &ProcessSchedule, p: f64, trials: u64, seed: u64) -> Result<FrequencyReport> {
    let wf = check_exponent(p)?;
    if trials < MIN_FREQUENCY_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_FREQUENCY_TRIALS} trials, got {trials}"
        )));
    }
    if schedule.record_count() == 0 {
        return Err(Error::InvalidSchedule("no record events".into()));
    }
    let paths = enumerate_paths(schedule, p)?;

    let mut tally: HashMap<Vec<usize>, u64> = HashMap::new();
    let mut outcomes = Vec::with_capacity(schedule.record_count());
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        outcomes.clear();
        walk(
            schedule,
            &wf,
            |_, w| Ok(sample_index(w, &mut rng)),
            |_, _, k, _| outcomes.push(k),
        )?;
        match tally.get_mut(&outcomes) {
            Some(c) => *c += 1,
            None => {
                tally.insert(outcomes.clone(), 1);
            }
        }
    }

    let mut counts = BTreeMap::new();
    let mut expected = BTreeMap::new();
    for (path, &w) in &paths {
        let key = schedule.outcome_key(path);
        counts.insert(key.clone(), tally.get(path).copied().unwrap_or(0));
        expected.insert(key, w);
    }
    // A sampled sequence always has positive weight, so it was enumerated.
    debug_assert!(tally.keys().all(|path| paths.contains_key(path)));

    let (chi_square, degrees_of_freedom, pooled_cells) = pearson_chi_square(&counts, &expected, trials);
    let p_value = if degrees_of_freedom == 0 {
        1.0
    } else {
        ChiSquared::new(degrees_of_freedom as f64)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sf(chi_square)
    };
    Ok(FrequencyReport {
        counts,
        trials,
        expected,
        chi_square,
        p_value,
        degrees_of_freedom,
        pooled_cells,
    })
}

/// Pearson statistic with low-expectation cells pooled. Returns the
/// statistic, degrees of freedom, and the pooled cell keys.
fn pearson_chi_square(
    counts: &BTreeMap<String, u64>,
    expected: &BTreeMap<String, f64>,
    trials: u64,
) -> (f64, usize, Vec<String>) {
    let n = trials as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled_keys = Vec::new();
    let (mut pooled_observed, mut pooled_expected) = (0.0, 0.0);
    for (key, &w) in expected {
        let observed = counts.get(key).copied().unwrap_or(0) as f64;
        if w * n < MIN_EXPECTED_COUNT {
            pooled_keys.push(key.clone());
            pooled_observed += observed;
            pooled_expected += w * n;
        } else {
            cells.push((observed, w * n));
        }
    }
    if !pooled_keys.is_empty() {
        if pooled_expected >= MIN_EXPECTED_COUNT || cells.is_empty() {
            cells.push((pooled_observed, pooled_expected));
        } else {
            // Still too small on its own: fold into the smallest regular cell.
            let smallest = cells
                .iter_mut()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            smallest.0 += pooled_observed;
            smallest.1 += pooled_expected;
        }
    }
    let chi_square = cells
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    (chi_square, cells.len().saturating_sub(1), pooled_keys)
}
