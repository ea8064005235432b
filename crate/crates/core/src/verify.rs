//! Interval value iteration over an [`Imdp`].
//!
//! Lower bounds minimise over actions and adversaries, upper bounds maximise over
//! both. [`Mode::Robust`] replaces the lower recursion by `max_a min_θ`, the value
//! a controller can guarantee against the worst admissible distribution.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::abstraction::{Imdp, ROW_SUM_TOL};
use crate::error::{Error, Result};
use crate::math;
use crate::pctl::{Comparison, PathFormula, Query, StateFormula};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 100_000;
/// Largest bounded-until horizon accepted.
pub const MAX_HORIZON: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    /// `min_a min_θ` for the lower bound, `max_a max_θ` for the upper.
    #[default]
    Paper,
    /// `max_a min_θ` for the lower bound, `max_a max_θ` for the upper.
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateClass {
    /// Satisfies the target formula.
    One,
    /// Satisfies neither formula.
    Zero,
    Maybe,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationResult {
    pub p_lo: Vec<f64>,
    pub p_up: Vec<f64>,
    /// `strategy_min[τ][q]`: action index used at time `τ` by the lower-bound
    /// recursion. Bounded until has `k` entries; unbounded until and next have one.
    pub strategy_min: Vec<Vec<usize>>,
    pub strategy_max: Vec<Vec<usize>>,
    /// Horizon `k`, or sweeps performed for unbounded until.
    pub horizon_used: usize,
    /// Last sup-norm change of either bound (unbounded until only).
    pub residual: f64,
    pub converged: bool,
    pub mode: Mode,
}

/// Splits states into sure-one, sure-zero and undetermined for `φ₁ U φ₂`.
pub fn classify_states(imdp: &Imdp, lhs: &StateFormula, rhs: &StateFormula) -> Result<Vec<StateClass>> {
    lhs.check_declared(imdp.ap())?;
    rhs.check_declared(imdp.ap())?;
    Ok(imdp
        .labels()
        .iter()
        .map(|l| {
            if rhs.holds(l) {
                StateClass::One
            } else if !lhs.holds(l) {
                StateClass::Zero
            } else {
                StateClass::Maybe
            }
        })
        .collect())
}

fn check_row(lo: &[f64], up: &[f64]) -> core::result::Result<(), alloc::string::String> {
    if lo.len() != up.len() {
        return Err(format!("{} lower bounds but {} upper bounds", lo.len(), up.len()));
    }
    if let Some(j) = (0..lo.len()).find(|&j| !(lo[j] <= up[j])) {
        return Err(format!("lo > up at successor {j}"));
    }
    let (sl, su) = (math::pairwise_sum(lo), math::pairwise_sum(up));
    if sl > 1.0 + ROW_SUM_TOL || su < 1.0 - ROW_SUM_TOL {
        return Err(format!("sum lo = {sl}, sum up = {su}"));
    }
    Ok(())
}

/// Feasible distribution `lo ≤ θ ≤ up`, `Σ θ = 1` optimising `Σ θ_j v_j`.
///
/// Starts from `lo` and raises successors in order of value (ascending to minimise,
/// descending to maximise, lowest index first among ties) until the free mass is used.
pub fn resolve_adversary(lo: &[f64], up: &[f64], values: &[f64], direction: Direction) -> Result<Vec<f64>> {
    check_row(lo, up).map_err(|reason| Error::InfeasibleRow {
        state: 0,
        action: 0,
        reason,
    })?;
    if values.len() != lo.len() {
        return Err(Error::DimensionMismatch {
            what: "value vector",
            expected: lo.len(),
            got: values.len(),
        });
    }
    let order = value_order(values, direction);
    let mut theta = lo.to_vec();
    let mut rem = 1.0 - math::pairwise_sum(lo);
    for &j in &order {
        if rem <= 0.0 {
            break;
        }
        let add = (up[j] - lo[j]).min(rem);
        theta[j] += add;
        rem -= add;
    }
    Ok(theta)
}

/// Successor indices sorted for the greedy; stable so ties keep index order.
fn value_order(values: &[f64], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    match direction {
        Direction::Minimize => order.sort_by(|&a, &b| values[a].total_cmp(&values[b])),
        Direction::Maximize => order.sort_by(|&a, &b| values[b].total_cmp(&values[a])),
    }
    order
}

/// `Σ θ_j v_j` for the greedy `θ` with a precomputed order.
fn greedy_value(lo: &[f64], up: &[f64], values: &[f64], order: &[usize]) -> f64 {
    let mut base = 0.0;
    let mut mass = 0.0;
    for j in 0..lo.len() {
        if up[j] == 0.0 {
            continue;
        }
        base += lo[j] * values[j];
        mass += lo[j];
    }
    let mut rem = 1.0 - mass;
    for &j in order {
        if rem <= 0.0 {
            break;
        }
        let slack = up[j] - lo[j];
        if slack > 0.0 {
            let add = slack.min(rem);
            base += add * values[j];
            rem -= add;
        }
    }
    base
}

struct Sweep<'a> {
    imdp: &'a Imdp,
    mode: Mode,
}

impl Sweep<'_> {
    /// One Bellman step for both bounds over the states in `maybe`.
    fn step(
        &self,
        maybe: &[usize],
        prev_lo: &[f64],
        prev_up: &[f64],
        next_lo: &mut [f64],
        next_up: &mut [f64],
        act_lo: &mut [usize],
        act_up: &mut [usize],
    ) {
        let order_min = value_order(prev_lo, Direction::Minimize);
        let order_max = value_order(prev_up, Direction::Maximize);
        for &q in maybe {
            let mut best_lo = (0usize, f64::NAN);
            let mut best_up = (0usize, f64::NAN);
            for a in 0..self.imdp.n_actions() {
                let (lo, up) = self.imdp.row(a, q);
                let vl = greedy_value(lo, up, prev_lo, &order_min);
                let vu = greedy_value(lo, up, prev_up, &order_max);
                let better_lo = match self.mode {
                    Mode::Paper => vl < best_lo.1,
                    Mode::Robust => vl > best_lo.1,
                };
                if a == 0 || better_lo {
                    best_lo = (a, vl);
                }
                if a == 0 || vu > best_up.1 {
                    best_up = (a, vu);
                }
            }
            next_lo[q] = best_lo.1.clamp(0.0, 1.0);
            next_up[q] = best_up.1.clamp(0.0, 1.0).max(next_lo[q]);
            act_lo[q] = best_lo.0;
            act_up[q] = best_up.0;
        }
    }
}

fn initial(classes: &[StateClass]) -> Vec<f64> {
    classes
        .iter()
        .map(|c| if *c == StateClass::One { 1.0 } else { 0.0 })
        .collect()
}

fn maybe_states(classes: &[StateClass]) -> Vec<usize> {
    (0..classes.len()).filter(|&q| classes[q] == StateClass::Maybe).collect()
}

/// Bounds on `P(φ₁ U^{≤k} φ₂)` from every state.
pub fn interval_value_iteration(
    imdp: &Imdp,
    lhs: &StateFormula,
    rhs: &StateFormula,
    k: usize,
    mode: Mode,
) -> Result<VerificationResult> {
    if k > MAX_HORIZON {
        return Err(Error::invalid("k", format!("horizon above {MAX_HORIZON}")));
    }
    let classes = classify_states(imdp, lhs, rhs)?;
    let n = imdp.n_states();
    let maybe = maybe_states(&classes);
    let sweep = Sweep { imdp, mode };
    let mut lo = initial(&classes);
    let mut up = lo.clone();
    let mut next_lo = lo.clone();
    let mut next_up = up.clone();
    // Filled from the last step backwards: entry τ is the decision at time τ.
    let mut strat_lo = vec![vec![0usize; n]; k];
    let mut strat_up = vec![vec![0usize; n]; k];
    for t in 1..=k {
        let tau = k - t;
        sweep.step(
            &maybe,
            &lo,
            &up,
            &mut next_lo,
            &mut next_up,
            &mut strat_lo[tau],
            &mut strat_up[tau],
        );
        core::mem::swap(&mut lo, &mut next_lo);
        core::mem::swap(&mut up, &mut next_up);
    }
    Ok(VerificationResult {
        p_lo: lo,
        p_up: up,
        strategy_min: strat_lo,
        strategy_max: strat_up,
        horizon_used: k,
        residual: 0.0,
        converged: true,
        mode,
    })
}

/// Bounds on `P(φ₁ U φ₂)`, iterating until both bounds move by less than `tol`.
///
/// Hitting `max_iters` returns the last iterate with `converged = false`.
pub fn interval_value_iteration_unbounded(
    imdp: &Imdp,
    lhs: &StateFormula,
    rhs: &StateFormula,
    tol: f64,
    max_iters: usize,
    mode: Mode,
) -> Result<VerificationResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let classes = classify_states(imdp, lhs, rhs)?;
    let n = imdp.n_states();
    let maybe = maybe_states(&classes);
    let sweep = Sweep { imdp, mode };
    let mut lo = initial(&classes);
    let mut up = lo.clone();
    let mut next_lo = lo.clone();
    let mut next_up = up.clone();
    let mut act_lo = vec![0usize; n];
    let mut act_up = vec![0usize; n];
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    while iters < max_iters {
        sweep.step(&maybe, &lo, &up, &mut next_lo, &mut next_up, &mut act_lo, &mut act_up);
        iters += 1;
        residual = maybe
            .iter()
            .map(|&q| math::abs(next_lo[q] - lo[q]).max(math::abs(next_up[q] - up[q])))
            .fold(0.0, f64::max);
        core::mem::swap(&mut lo, &mut next_lo);
        core::mem::swap(&mut up, &mut next_up);
        if residual < tol {
            break;
        }
    }
    Ok(VerificationResult {
        p_lo: lo,
        p_up: up,
        strategy_min: vec![act_lo],
        strategy_max: vec![act_up],
        horizon_used: iters,
        residual: if maybe.is_empty() { 0.0 } else { residual },
        converged: maybe.is_empty() || residual < tol,
        mode,
    })
}

/// Bounds on `P(X φ)`.
pub fn check_next(imdp: &Imdp, target: &StateFormula, mode: Mode) -> Result<VerificationResult> {
    target.check_declared(imdp.ap())?;
    let n = imdp.n_states();
    let ind: Vec<f64> = imdp
        .labels()
        .iter()
        .map(|l| if target.holds(l) { 1.0 } else { 0.0 })
        .collect();
    let all: Vec<usize> = (0..n).collect();
    let mut lo = vec![0.0; n];
    let mut up = vec![0.0; n];
    let mut act_lo = vec![0usize; n];
    let mut act_up = vec![0usize; n];
    Sweep { imdp, mode }.step(&all, &ind, &ind, &mut lo, &mut up, &mut act_lo, &mut act_up);
    Ok(VerificationResult {
        p_lo: lo,
        p_up: up,
        strategy_min: vec![act_lo],
        strategy_max: vec![act_up],
        horizon_used: 1,
        residual: 0.0,
        converged: true,
        mode,
    })
}

/// Options for [`check_path`] on unbounded until.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnboundedOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for UnboundedOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// Dispatches on the path formula.
pub fn check_path(imdp: &Imdp, path: &PathFormula, mode: Mode, opts: UnboundedOptions) -> Result<VerificationResult> {
    match path {
        PathFormula::Next(f) => check_next(imdp, f, mode),
        PathFormula::BoundedUntil { lhs, rhs, k } => interval_value_iteration(imdp, lhs, rhs, *k, mode),
        PathFormula::Until { lhs, rhs } => {
            interval_value_iteration_unbounded(imdp, lhs, rhs, opts.tol, opts.max_iters, mode)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

/// Three-valued verdict per state for `P⋈p`: yes when every value in
/// `[p_lo, p_up]` satisfies the bound, no when none does.
pub fn check_threshold(result: &VerificationResult, cmp: Comparison, p: f64) -> Result<Vec<Verdict>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", "threshold must lie in [0, 1]"));
    }
    Ok(result
        .p_lo
        .iter()
        .zip(&result.p_up)
        .map(|(&lo, &up)| {
            let (a, b) = (cmp.holds(lo, p), cmp.holds(up, p));
            match (a, b) {
                (true, true) => Verdict::Yes,
                (false, false) => {
                    // Interval endpoints both fail; for one-sided comparisons no interior
                    // point can satisfy either.
                    Verdict::No
                }
                _ => Verdict::Unknown,
            }
        })
        .collect())
}

/// Verdicts for a parsed query, when it carries a bound.
pub fn check_query(
    imdp: &Imdp,
    query: &Query,
    mode: Mode,
    opts: UnboundedOptions,
) -> Result<(VerificationResult, Option<Vec<Verdict>>)> {
    let res = check_path(imdp, &query.path, mode, opts)?;
    let verdicts = match query.bound {
        Some((c, p)) => Some(check_threshold(&res, c, p)?),
        None => None,
    };
    Ok((res, verdicts))
}

/// Time-indexed action tables.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Strategy {
    /// `min[τ][q]`.
    pub min: Vec<Vec<usize>>,
    pub max: Vec<Vec<usize>>,
}

impl Strategy {
    pub fn step0_min(&self) -> &[usize] {
        &self.min[0]
    }

    pub fn step0_max(&self) -> &[usize] {
        &self.max[0]
    }
}

pub fn synthesize_strategy(result: &VerificationResult) -> Result<Strategy> {
    if result.strategy_min.is_empty() || result.strategy_max.is_empty() {
        return Err(Error::MissingStrategy);
    }
    Ok(Strategy {
        min: result.strategy_min.clone(),
        max: result.strategy_max.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Provenance;
    use crate::pctl::parse_query;
    use alloc::string::{String, ToString};
    use approx::assert_relative_eq;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn point_imdp(p: Vec<Vec<f64>>, labels: Vec<Vec<String>>, ap: &[&str]) -> Imdp {
        let flat: Vec<f64> = p.concat();
        Imdp::new(s(&["a"]), vec![flat.clone()], vec![flat], s(ap), labels, Provenance::Custom).unwrap()
    }

    #[test]
    fn adversary_examples() {
        let lo = [0.0; 3];
        let up = [1.0; 3];
        let v = [0.1, 0.5, 0.9];
        assert_eq!(resolve_adversary(&lo, &up, &v, Direction::Minimize).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(resolve_adversary(&lo, &up, &v, Direction::Maximize).unwrap(), vec![0.0, 0.0, 1.0]);
        let th = resolve_adversary(&[0.2; 3], &[0.6; 3], &[0.0, 0.5, 1.0], Direction::Minimize).unwrap();
        assert_relative_eq!(th[0], 0.6, epsilon = 1e-15);
        let val: f64 = th.iter().zip([0.0, 0.5, 1.0]).map(|(t, v)| t * v).sum();
        assert_relative_eq!(val, 0.3, epsilon = 1e-15);
        let fixed = [0.3, 0.7];
        assert_eq!(resolve_adversary(&fixed, &fixed, &[1.0, 0.0], Direction::Maximize).unwrap(), fixed.to_vec());
        assert!(matches!(
            resolve_adversary(&[0.6, 0.6], &[0.7, 0.7], &[0.0, 1.0], Direction::Minimize),
            Err(Error::InfeasibleRow { .. })
        ));
    }

    #[test]
    fn greedy_ties_take_lowest_index() {
        let th = resolve_adversary(&[0.0; 3], &[1.0; 3], &[0.5, 0.5, 0.5], Direction::Maximize).unwrap();
        assert_eq!(th, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn three_state_chain() {
        let imdp = point_imdp(
            vec![vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![s(&["safe"]), s(&["goal"]), vec![]],
            &["safe", "goal"],
        );
        let q = parse_query("safe U<=1 goal").unwrap();
        let r = check_path(&imdp, &q.path, Mode::Paper, Default::default()).unwrap();
        assert_eq!(r.p_lo, vec![0.5, 1.0, 0.0]);
        assert_eq!(r.p_up, vec![0.5, 1.0, 0.0]);
        let r0 = interval_value_iteration(&imdp, &StateFormula::prop("safe"), &StateFormula::prop("goal"), 0, Mode::Paper).unwrap();
        assert_eq!(r0.p_lo, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn geometric_loop_converges() {
        let imdp = point_imdp(
            vec![vec![0.9, 0.1], vec![0.0, 1.0]],
            vec![vec![], s(&["goal"])],
            &["goal"],
        );
        let tol = 1e-6;
        let r = interval_value_iteration_unbounded(&imdp, &StateFormula::True, &StateFormula::prop("goal"), tol, 100_000, Mode::Paper).unwrap();
        assert!(r.converged);
        assert!((r.p_lo[0] - 1.0).abs() < 1e-5);
        let bound = (tol.ln() / 0.9f64.ln()).ceil() as usize;
        assert!(r.horizon_used <= bound + 1, "{} > {}", r.horizon_used, bound);

        let one_step = point_imdp(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![vec![], s(&["goal"])], &["goal"]);
        let r = interval_value_iteration_unbounded(&one_step, &StateFormula::True, &StateFormula::prop("goal"), tol, 10, Mode::Paper).unwrap();
        assert!(r.converged && r.horizon_used <= 2 && r.p_lo[0] == 1.0);
    }

    #[test]
    fn next_operator() {
        let imdp = point_imdp(
            vec![vec![0.7, 0.3, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![vec![], s(&["D"]), vec![]],
            &["D"],
        );
        let r = check_next(&imdp, &StateFormula::prop("D"), Mode::Paper).unwrap();
        assert_relative_eq!(r.p_lo[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(r.p_up[0], 0.3, epsilon = 1e-15);
        assert_eq!(r.p_lo[1], 1.0);
        assert_eq!(r.p_up[2], 0.0);
    }

    #[test]
    fn classification() {
        let imdp = point_imdp(
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![s(&["O"]), s(&["D"]), vec![]],
            &["O", "D", "p"],
        );
        let c = classify_states(&imdp, &StateFormula::prop("O").not(), &StateFormula::prop("D")).unwrap();
        assert_eq!(c, vec![StateClass::Zero, StateClass::One, StateClass::Maybe]);
        let c = classify_states(&imdp, &StateFormula::True, &StateFormula::True).unwrap();
        assert!(c.iter().all(|c| *c == StateClass::One));
        let c = classify_states(&imdp, &StateFormula::True, &StateFormula::prop("p")).unwrap();
        assert!(c.iter().all(|c| *c == StateClass::Maybe));
        assert!(classify_states(&imdp, &StateFormula::True, &StateFormula::prop("zz")).is_err());
    }

    #[test]
    fn thresholds() {
        let r = VerificationResult {
            p_lo: vec![0.6],
            p_up: vec![0.8],
            strategy_min: vec![],
            strategy_max: vec![],
            horizon_used: 0,
            residual: 0.0,
            converged: true,
            mode: Mode::Paper,
        };
        assert_eq!(check_threshold(&r, Comparison::Ge, 0.5).unwrap(), vec![Verdict::Yes]);
        assert_eq!(check_threshold(&r, Comparison::Ge, 0.9).unwrap(), vec![Verdict::No]);
        assert_eq!(check_threshold(&r, Comparison::Ge, 0.7).unwrap(), vec![Verdict::Unknown]);
        assert_eq!(check_threshold(&r, Comparison::Lt, 0.5).unwrap(), vec![Verdict::No]);
        assert_eq!(synthesize_strategy(&r), Err(Error::MissingStrategy));
    }

    #[test]
    fn dominating_action_is_chosen() {
        // Action 1 reaches the goal with higher probability everywhere.
        let a0 = vec![0.5, 0.0, 0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let a1 = vec![0.2, 0.7, 0.1, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let lo1: Vec<f64> = a1.iter().map(|v| (v - 0.1f64).max(0.0)).collect();
        let up1: Vec<f64> = a1.iter().map(|v| (v + 0.1f64).min(1.0)).collect();
        let imdp = Imdp::new(
            s(&["a", "b"]),
            vec![a0.clone(), lo1],
            vec![a0, up1],
            s(&["goal"]),
            vec![vec![], s(&["goal"]), vec![]],
            Provenance::Custom,
        )
        .unwrap();
        let r = interval_value_iteration(&imdp, &StateFormula::True, &StateFormula::prop("goal"), 4, Mode::Paper).unwrap();
        let st = synthesize_strategy(&r).unwrap();
        assert!(st.max.iter().all(|step| step[0] == 1));
        assert_eq!(st.step0_max()[0], 1);
        let rob = interval_value_iteration(&imdp, &StateFormula::True, &StateFormula::prop("goal"), 4, Mode::Robust).unwrap();
        assert!(rob.p_lo[0] >= r.p_lo[0]);
        assert!(rob.p_lo[0] <= rob.p_up[0]);
    }
}
