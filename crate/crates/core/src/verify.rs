//! Pass/fail table of the theory checks.
//!
//! Groups:
//!
//! - `a1`: transition-count normalization, running transition estimators and
//!   the variance ratio of averaged running means
//! - `a2`: bandit reward estimators against their mean and variance forms
//! - `a3`: coefficient table identities and the fractional-update closed form
//!
//! Every check reports an observed statistic, the threshold it is compared
//! with, and a standard error where the statistic is Monte Carlo.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::indexed_stream;
use crate::tabular::{t_update_conservative, t_update_synthetic, TransitionCounts};
use crate::theory::bandit::{run_bandit_replications, BanditSpec};
use crate::theory::coeffs::{
    addon_magnitude, binomial_table, coeff_table, verify_fractional_theorem, CoeffTable,
};
use crate::theory::estimators::{transition_estimator_chain, ChainSpec, EstimatorVariant};
use crate::theory::variance::variance_ratio_curve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    A1,
    A2,
    A3,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::A1, Group::A2, Group::A3];

    pub fn parse(s: &str) -> Option<Group> {
        match s.to_ascii_lowercase().as_str() {
            "a1" => Some(Group::A1),
            "a2" => Some(Group::A2),
            "a3" => Some(Group::A3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::A1 => "a1",
            Group::A2 => "a2",
            Group::A3 => "a3",
        }
    }
}

/// How a check compares `observed` with `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compare {
    Below,
    AtMost,
    Above,
}

impl Compare {
    fn symbol(self) -> &'static str {
        match self {
            Compare::Below => "<",
            Compare::AtMost => "<=",
            Compare::Above => ">",
        }
    }

    fn holds(self, observed: f64, threshold: f64) -> bool {
        match self {
            Compare::Below => observed < threshold,
            Compare::AtMost => observed <= threshold,
            Compare::Above => observed > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub group: Group,
    pub name: String,
    pub observed: f64,
    pub compare: Compare,
    pub threshold: f64,
    pub se: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

impl CheckRow {
    fn new(
        group: Group,
        name: impl Into<String>,
        observed: f64,
        compare: Compare,
        threshold: f64,
    ) -> Self {
        CheckRow {
            group,
            name: name.into(),
            observed,
            compare,
            threshold,
            se: None,
            passed: compare.holds(observed, threshold),
            detail: String::new(),
        }
    }

    fn se(mut self, se: f64) -> Self {
        self.se = Some(se);
        self
    }

    fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySettings {
    pub seed: u64,
    pub coeff_k_max: usize,
    pub closed_form_instances: usize,
    pub normalization_updates: usize,
    pub chain_horizon: usize,
    pub variance_replications: usize,
    pub bandit_replications: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            seed: 20_240_101,
            coeff_k_max: 50,
            closed_form_instances: 1000,
            normalization_updates: 100_000,
            chain_horizon: 100_000,
            variance_replications: 10_000,
            bandit_replications: 10_000,
        }
    }
}

/// Violations of `c[k][k] = 1`, `c[2][k] = 3` (k >= 3) and
/// `c[j][k+1] = c[j][k] + c[j-1][k]` (3 <= j <= k).
pub fn coefficient_violations(table: &CoeffTable) -> usize {
    let n = table.k_max();
    let mut bad = 0;
    for k in 2..=n {
        bad += (table.get(k, k) != 1) as usize;
        if k >= 3 {
            bad += (table.get(2, k) != 3) as usize;
        }
    }
    for k in 3..n {
        for j in 3..=k {
            bad += (table.get(j, k + 1) != table.get(j, k) + table.get(j - 1, k)) as usize;
        }
    }
    bad
}

/// Max closed-form deviation over random instances with `Q`, reward and
/// bootstrap in `[-10, 10]`, `alpha` in `{0.1, 1}`, `K` in `1..=20`.
pub fn max_closed_form_deviation(instances: usize, seed: u64, table: &CoeffTable) -> f64 {
    let mut rng = indexed_stream(seed, 0);
    (0..instances)
        .map(|_| {
            let q = rng.random_range(-10.0..=10.0);
            let r = rng.random_range(-10.0..=10.0);
            let b = rng.random_range(-10.0..=10.0);
            let alpha = if rng.random::<bool>() { 0.1 } else { 1.0 };
            let k = rng.random_range(1..=20);
            verify_fractional_theorem(q, r, b, alpha, k, table)
        })
        .fold(0.0, f64::max)
}

fn group_a3(s: &VerifySettings) -> Vec<CheckRow> {
    let g = Group::A3;
    let table = coeff_table(s.coeff_k_max.max(100));
    let binom = binomial_table(20);
    let mut rows = vec![CheckRow::new(
        g,
        "coefficient identities",
        coefficient_violations(&coeff_table(s.coeff_k_max)) as f64,
        Compare::AtMost,
        0.0,
    )
    .detail(format!("violations for K_max = {}", s.coeff_k_max))];
    rows.push(
        CheckRow::new(
            g,
            "closed form vs iteration",
            max_closed_form_deviation(s.closed_form_instances, s.seed, &table),
            Compare::Below,
            1e-10,
        )
        .detail(format!(
            "max |dev| over {} instances, stated coefficients",
            s.closed_form_instances
        )),
    );
    rows.push(
        CheckRow::new(
            g,
            "closed form vs iteration (binomial)",
            max_closed_form_deviation(s.closed_form_instances, s.seed, &binom),
            Compare::Below,
            1e-10,
        )
        .detail("same instances with c[j][K] = C(K, j)"),
    );
    let (worst_k, worst) = (5..=100)
        .map(|k| (k, addon_magnitude(1.0, k, &table)))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    rows.push(
        CheckRow::new(
            g,
            "add-on magnitude, alpha=1, K>=5",
            worst,
            Compare::Below,
            1e-2,
        )
        .detail(format!("largest at K = {worst_k}")),
    );
    let rises = (5..100)
        .filter(|&k| addon_magnitude(1.0, k + 1, &table) >= addon_magnitude(1.0, k, &table))
        .count();
    rows.push(
        CheckRow::new(
            g,
            "add-on decreasing in K",
            rises as f64,
            Compare::AtMost,
            0.0,
        )
        .detail("non-decreasing steps over K = 5..100"),
    );
    rows
}

/// `(max |sum_s' T(s'|s,a) - 1|, visited pairs)` after mixed synthetic
/// updates: each step is either observed (K identical pairs) or imputed (K
/// independent pairs).
pub fn normalization_error(updates: usize, k: usize, seed: u64) -> (f64, usize) {
    const STATES: usize = 192;
    const ACTIONS: usize = 8;
    let mut rng = indexed_stream(seed, 1);
    let mut t = TransitionCounts::new(STATES, ACTIONS);
    for _ in 0..updates {
        let a = rng.random_range(0..ACTIONS);
        let pairs: Vec<(usize, usize)> = if rng.random::<bool>() {
            let pair = (rng.random_range(0..STATES), rng.random_range(0..STATES));
            vec![pair; k]
        } else {
            (0..k)
                .map(|_| (rng.random_range(0..STATES), rng.random_range(0..STATES)))
                .collect()
        };
        t_update_synthetic(&mut t, &pairs, a, k);
    }
    let visited: Vec<(usize, usize)> = t.visited().collect();
    let worst = visited
        .iter()
        .map(|&(s, a)| {
            let total: f64 = t
                .successors(s, a)
                .filter_map(|(s2, _)| t.t_hat(s, a, s2))
                .sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max);
    (worst, visited.len())
}

/// Max triple-count difference between conservative and synthetic updates
/// on a fully observed stream.
pub fn conservative_synthetic_gap(updates: usize, k: usize, seed: u64) -> f64 {
    const STATES: usize = 192;
    const ACTIONS: usize = 8;
    let mut rng = indexed_stream(seed, 2);
    let mut cons = TransitionCounts::new(STATES, ACTIONS);
    let mut syn = TransitionCounts::new(STATES, ACTIONS);
    let mut s = rng.random_range(0..STATES);
    for _ in 0..updates {
        let a = rng.random_range(0..ACTIONS);
        let s2 = rng.random_range(0..STATES);
        t_update_conservative(&mut cons, s, a, s2, true);
        t_update_synthetic(&mut syn, &vec![(s, s2); k], a, k);
        s = s2;
    }
    let mut gap: f64 = 0.0;
    for (s, a) in cons.visited().chain(syn.visited()) {
        for (s2, _) in cons.successors(s, a).chain(syn.successors(s, a)) {
            gap = gap.max((cons.triple_count(s, a, s2) - syn.triple_count(s, a, s2)).abs());
        }
    }
    gap
}

fn group_a1(s: &VerifySettings) -> Vec<CheckRow> {
    let g = Group::A1;
    let (norm, visited) = normalization_error(s.normalization_updates, 10, s.seed);
    let mut rows = vec![
        CheckRow::new(
            g,
            "synthetic kernel normalization",
            norm,
            Compare::AtMost,
            1e-9,
        )
        .detail(format!(
            "{} updates, K = 10, {visited} visited pairs",
            s.normalization_updates
        )),
        CheckRow::new(
            g,
            "conservative == synthetic on full data",
            conservative_synthetic_gap(s.normalization_updates, 10, s.seed),
            Compare::AtMost,
            1e-12,
        ),
    ];

    let (p, pm, k) = (0.3, 0.4, 5);
    let chain = |variant, stream| {
        let spec = ChainSpec {
            p,
            p_missing: pm,
            k,
            horizon: s.chain_horizon,
            fractional: true,
        };
        *transition_estimator_chain(&spec, variant, &mut indexed_stream(s.seed, stream))
            .last()
            .unwrap_or(&f64::NAN)
    };
    let obs_se = (p * (1.0 - p) / (s.chain_horizon as f64 * (1.0 - pm))).sqrt();
    let obs = chain(EstimatorVariant::ObservedOnly, 3);
    rows.push(
        CheckRow::new(
            g,
            "observed-only estimator consistent",
            (obs - p).abs() / obs_se,
            Compare::Below,
            3.0,
        )
        .se(obs_se)
        .detail(format!("|z|; final {obs:.6} vs p = {p}")),
    );
    // observed-only spread bounds the oracle estimator's, whose imputed
    // draws only add information
    let oracle = chain(EstimatorVariant::Oracle, 4);
    rows.push(
        CheckRow::new(
            g,
            "oracle imputation with 1/K weights",
            (oracle - p).abs() / obs_se,
            Compare::Below,
            3.0,
        )
        .se(obs_se)
        .detail(format!("|z|; final {oracle:.6} vs p = {p}")),
    );

    let grid = [10, 100, 1000];
    let curve = variance_ratio_curve(0.3, 0.5, &grid, s.variance_replications, s.seed);
    let min_z = curve
        .points
        .windows(2)
        .zip(&curve.diff_se)
        .map(|(w, se)| (w[1].ratio - w[0].ratio) / se)
        .fold(f64::INFINITY, f64::min);
    let ratios: Vec<String> = curve
        .points
        .iter()
        .map(|pt| format!("t={}: {:.4}±{:.4}", pt.t, pt.ratio, pt.se))
        .collect();
    rows.push(
        CheckRow::new(g, "variance ratio increasing", min_z, Compare::Above, 2.0)
            .detail(format!("min step / SE; {}", ratios.join(", "))),
    );
    rows
}

/// Two states, two actions, horizon 200.
pub fn reference_bandit(k: usize) -> BanditSpec {
    BanditSpec {
        state_probs: vec![0.5, 0.5],
        reward_means: vec![vec![1.0, 0.2], vec![0.0, 0.6]],
        reward_stds: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
        p_missing: 0.5,
        imputation_probs: vec![0.7, 0.3],
        k,
        horizon: 200,
    }
}

fn group_a2(s: &VerifySettings) -> Result<Vec<CheckRow>> {
    let g = Group::A2;
    let mut rows = Vec::new();
    for (i, k) in [1usize, 5].into_iter().enumerate() {
        let spec = reference_bandit(k);
        let rep =
            run_bandit_replications(&spec, s.bandit_replications, s.seed.wrapping_add(i as u64))?;
        for st in 0..spec.n_states() {
            for a in 0..spec.n_actions() {
                if k == 1 {
                    let m = &rep.obs[st][a];
                    rows.push(
                        CheckRow::new(
                            g,
                            format!("observed mean unbiased s{st} a{a}"),
                            m.mean_z().abs(),
                            Compare::Below,
                            3.0,
                        )
                        .se(m.mean_diff_se)
                        .detail(format!(
                            "|z|; {:.5} vs {:.5}",
                            m.empirical_mean, m.closed_form_mean
                        )),
                    );
                }
                let m = &rep.imp[st][a];
                rows.push(
                    CheckRow::new(
                        g,
                        format!("imputed mean bias K={k} s{st} a{a}"),
                        m.mean_z().abs(),
                        Compare::Below,
                        3.0,
                    )
                    .se(m.mean_diff_se)
                    .detail(format!(
                        "|z|; {:.5} vs {:.5}",
                        m.empirical_mean, m.closed_form_mean
                    )),
                );
                rows.push(
                    CheckRow::new(
                        g,
                        format!("imputed variance K={k} s{st} a{a}"),
                        m.var_rel_error(),
                        Compare::Below,
                        0.1,
                    )
                    .detail(format!(
                        "relative error; {:.6} vs {:.6}",
                        m.empirical_var, m.closed_form_var
                    )),
                );
            }
        }
        if k == 1 {
            for (a, m) in rep.question.iter().enumerate() {
                rows.push(
                    CheckRow::new(
                        g,
                        format!("pooled ? mean a{a}"),
                        m.mean_z().abs(),
                        Compare::Below,
                        3.0,
                    )
                    .se(m.mean_diff_se)
                    .detail(format!(
                        "|z|; {:.5} vs {:.5}",
                        m.empirical_mean, m.closed_form_mean
                    )),
                );
            }
        }
    }
    Ok(rows)
}

pub fn run_group(group: Group, settings: &VerifySettings) -> Result<Vec<CheckRow>> {
    match group {
        Group::A1 => Ok(group_a1(settings)),
        Group::A2 => group_a2(settings),
        Group::A3 => Ok(group_a3(settings)),
    }
}

pub fn run_groups(groups: &[Group], settings: &VerifySettings) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for g in groups {
        rows.extend(run_group(*g, settings)?);
    }
    Ok(rows)
}

pub fn render_table(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<5} {:<width$} {:>14} {:>4} {:>10} {:>12}  {:<4}  detail",
        "group", "check", "observed", "", "threshold", "se", "ok"
    );
    for r in rows {
        let se = r.se.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
        let _ = writeln!(
            out,
            "{:<5} {:<width$} {:>14.6e} {:>4} {:>10.1e} {:>12}  {:<4}  {}",
            r.group.name(),
            r.name,
            r.observed,
            r.compare.symbol(),
            r.threshold,
            se,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    out
}

/// CSV report with columns `group,check,observed,compare,threshold,se,passed,detail`.
pub fn write_report(rows: &[CheckRow], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "group",
        "check",
        "observed",
        "compare",
        "threshold",
        "se",
        "passed",
        "detail",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.group.name().to_string(),
            r.name.clone(),
            r.observed.to_string(),
            r.compare.symbol().to_string(),
            r.threshold.to_string(),
            r.se.map_or_else(String::new, |v| v.to_string()),
            r.passed.to_string(),
            r.detail.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifySettings {
        VerifySettings {
            closed_form_instances: 200,
            normalization_updates: 5_000,
            chain_horizon: 5_000,
            variance_replications: 500,
            bandit_replications: 300,
            ..Default::default()
        }
    }

    #[test]
    fn stated_table_satisfies_its_identities() {
        assert_eq!(coefficient_violations(&coeff_table(50)), 0);
        // Pascal's triangle breaks the constant second row
        assert!(coefficient_violations(&binomial_table(50)) > 0);
    }

    #[test]
    fn binomial_closed_form_matches_iteration() {
        assert!(max_closed_form_deviation(300, 1, &binomial_table(20)) < 1e-10);
    }

    #[test]
    fn normalization_and_agreement() {
        let (err, visited) = normalization_error(5_000, 7, 3);
        assert!(err <= 1e-9);
        assert!(visited > 1000);
        assert!(conservative_synthetic_gap(5_000, 7, 3) <= 1e-12);
    }

    #[test]
    fn every_group_reports_rows() {
        let s = quick();
        for g in Group::ALL {
            let rows = run_group(g, &s).unwrap();
            assert!(!rows.is_empty());
            assert!(rows.iter().all(|r| r.group == g));
        }
    }

    #[test]
    fn report_round_trips_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("verify.csv");
        let rows = run_group(Group::A3, &quick()).unwrap();
        write_report(&rows, &p).unwrap();
        let n = csv::Reader::from_path(&p).unwrap().records().count();
        assert_eq!(n, rows.len());
        assert!(render_table(&rows).lines().count() == rows.len() + 1);
    }
}
