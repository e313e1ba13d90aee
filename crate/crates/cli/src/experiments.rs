use kwise_core::dyadic_matrix::DyadicMatrix;
use kwise_core::maximal_inequality::{log_uniform_variances, mc_tail};
use kwise_core::parallel::map_trials;
use kwise_core::rng::{derive_seed, trial_rng};
use kwise_core::sign_families::{
    adversarial_params, empirical_moments, stage_moments, AdversarialParams, ExactMoments, Rational,
};
use kwise_core::stats::spread_ratio;
use kwise_core::streams::{dominance_constant, mc_sup_moment, sup_inner, NetHierarchy};
use kwise_core::walks::{fit_log_growth, scaling_table};
use kwise_core::{FamilyKind, Sampler, Stage};
use num_traits::{Signed, ToPrimitive, Zero};
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ExperimentConfig, ExperimentKind, FamilyConfig};
use crate::table::{num, ResultTable};
use crate::CliError;

/// The dyadic matrix at n = 8, entry for entry.
pub const REFERENCE_8: [[u32; 8]; 8] = [
    [3, 2, 1, 1, 0, 0, 0, 0],
    [2, 3, 1, 1, 0, 0, 0, 0],
    [1, 1, 3, 2, 0, 0, 0, 0],
    [1, 1, 2, 3, 0, 0, 0, 0],
    [0, 0, 0, 0, 3, 2, 1, 1],
    [0, 0, 0, 0, 2, 3, 1, 1],
    [0, 0, 0, 0, 1, 1, 3, 2],
    [0, 0, 0, 0, 1, 1, 2, 3],
];

pub fn run(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    match config.kind {
        ExperimentKind::FamilyVerify => family_verify(config),
        ExperimentKind::WalkScaling => walk_scaling(config),
        ExperimentKind::MatrixCheck => matrix_check(config),
        ExperimentKind::MaximalMc => maximal_mc(config),
        ExperimentKind::StreamTrack => stream_track(config),
        ExperimentKind::NetAudit => net_audit(config),
    }
}

fn rat(x: &Rational) -> String {
    num(x.to_f64().unwrap_or(f64::NAN))
}

fn max_abs<'a>(it: impl Iterator<Item = &'a Rational>) -> Rational {
    it.map(|x| x.abs())
        .fold(Rational::zero(), |a, b| if b > a { b } else { a })
}

/// Exact statements about one adversarial stage, as `(check, value, holds)`.
///
/// The value is the largest absolute deviation from the claimed identity, so
/// a passing check always reports zero.
pub fn exact_stage_checks(
    params: &AdversarialParams,
    m: &ExactMoments,
) -> Vec<(&'static str, Rational, bool)> {
    let root = params.root;
    let blocks = || (1..=root).flat_map(move |a| (1..=root).map(move |b| (a, b)));
    let mut out = Vec::new();
    match m.stage {
        Stage::H => {
            let mean = max_abs((0..root).map(|c| m.mean(c * root + 1)));
            let off = max_abs(blocks().map(|(a, b)| m.block_cov(a, b)));
            let residual = params.zero_covariance_residual().abs();
            out.push(("mean=0", mean.clone(), mean.is_zero()));
            out.push(("covariance=identity", off.clone(), off.is_zero()));
            out.push(("mixing residual=0", residual.clone(), residual.is_zero()));
        }
        Stage::H3 => {
            let cross = max_abs(
                blocks()
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| m.block_cov(a, b)),
            );
            out.push(("cross-block covariance=0", cross.clone(), cross.is_zero()));
        }
        Stage::H2 => {
            let shift = blocks()
                .map(|(a, b)| (m.block_cov(a, b) - m.block_cov(a % root + 1, b % root + 1)).abs())
                .fold(Rational::zero(), |x, y| if y > x { y } else { x });
            let table = blocks()
                .map(|(a, b)| (m.block_cov(a, b) - params.g_at(a, b)).abs())
                .fold(Rational::zero(), |x, y| if y > x { y } else { x });
            out.push(("block-shift invariance", shift.clone(), shift.is_zero()));
            out.push(("covariance=g-table", table.clone(), table.is_zero()));
        }
        Stage::H1 => {
            let harmonic = (1..=params.ell as i64)
                .map(|d| Rational::new(1.into(), d.into()))
                .fold(Rational::zero(), |a, b| a + b);
            let want = harmonic * Rational::from_integer((root as i64).into());
            let got = params.drift_h1(params.ell).expect("ell is a valid block");
            let gap = (&got - &want).abs();
            out.push(("half-way drift=sqrt(n)*H_ell", gap.clone(), gap.is_zero()));
        }
    }
    out
}

fn family_verify(c: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let fam = c.family_or(FamilyConfig::adversarial(Stage::H));
    let seed = c.seed();
    let trials = c.trials_or(10_000);
    let z = c.assert.z.unwrap_or(5.0);
    let mut t = ResultTable::new(
        "family-verify",
        &["n", "family", "check", "value", "trials", "seed"],
        seed,
    );
    for &n in c.require_ns()? {
        let spec = fam.spec(n);
        spec.validate()?;
        let label = spec.label();
        if fam.kind == FamilyKind::AdversarialStage {
            let params = adversarial_params(n)?;
            let m = stage_moments(&params, spec.stage.expect("validated"));
            for (check, value, holds) in exact_stage_checks(&params, &m) {
                t.push_row(vec![
                    n.to_string(),
                    label.clone(),
                    check.into(),
                    rat(&value),
                    "0".into(),
                    seed.to_string(),
                ]);
                t.check(
                    format!("{label} n={n} {check}"),
                    holds,
                    format!("max deviation {value}"),
                );
            }
        } else {
            let sampler = Sampler::new(&spec)?;
            let e = empirical_moments(&sampler, trials, derive_seed(seed, n as u64))?;
            let mean = (1..=n).map(|i| e.mean(i).abs()).fold(0.0, f64::max);
            let cov = e.max_offdiag_deviation(|_, _| 0.0);
            let limit = z / (trials as f64).sqrt();
            for (check, value) in [("max |mean|", mean), ("max |offdiag covariance|", cov)] {
                t.push_row(vec![
                    n.to_string(),
                    label.clone(),
                    check.into(),
                    num(value),
                    trials.to_string(),
                    seed.to_string(),
                ]);
                t.check(
                    format!("{label} n={n} {check}"),
                    value <= limit,
                    format!("{value:.5} vs {z}/sqrt(trials) = {limit:.5}"),
                );
            }
        }
    }
    Ok(t)
}

fn walk_scaling(c: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let fam = c.family_or(FamilyConfig::adversarial(Stage::H));
    let ns = c.require_ns()?;
    let order = c.order.unwrap_or(1);
    let trials = c.trials_or(10_000);
    let seed = c.seed();
    let table = scaling_table(&fam.spec(ns[0]), ns, order, trials, seed)?;
    let mut t = ResultTable::new(
        "walk-scaling",
        &[
            "n",
            "family",
            "moment_order",
            "mean",
            "stderr",
            "normalized",
            "normalized_lg",
            "trials",
            "seed",
        ],
        seed,
    );
    let normalized = table.normalized();
    let normalized_lg: Vec<f64> = table
        .rows
        .iter()
        .zip(&normalized)
        .map(|(r, v)| v / (r.n as f64).log2().powi(order as i32))
        .collect();
    for ((r, v), vl) in table.rows.iter().zip(&normalized).zip(&normalized_lg) {
        t.push_row(vec![
            r.n.to_string(),
            table.family.clone(),
            order.to_string(),
            num(r.mean),
            num(r.stderr),
            num(*v),
            num(*vl),
            r.trials.to_string(),
            seed.to_string(),
        ]);
    }
    let a = &c.assert;
    if a.min_r2.is_some() || a.flat_slope_sigmas.is_some() {
        let fit = fit_log_growth(&table)?;
        if let Some(r2) = a.min_r2 {
            t.check(
                format!("{} growth in lg n", table.family),
                fit.slope > 0.0 && fit.r_squared >= r2,
                format!(
                    "slope {:.5}, R2 {:.4}, need slope > 0 and R2 >= {r2}",
                    fit.slope, fit.r_squared
                ),
            );
        }
        if let Some(k) = a.flat_slope_sigmas {
            t.check(
                format!("{} flat in lg n", table.family),
                fit.slope.abs() <= k * fit.slope_stderr,
                format!(
                    "slope {:.5} +- {:.5}, need |slope| <= {k} se",
                    fit.slope, fit.slope_stderr
                ),
            );
        }
    }
    spread_checks(
        &mut t,
        &table.family,
        &normalized,
        &normalized_lg,
        a.max_spread,
        a.max_spread_lg,
    );
    Ok(t)
}

fn spread_checks(
    t: &mut ResultTable,
    what: &str,
    normalized: &[f64],
    normalized_lg: &[f64],
    max_spread: Option<f64>,
    max_spread_lg: Option<f64>,
) {
    for (values, limit, label) in [
        (normalized, max_spread, "normalized"),
        (normalized_lg, max_spread_lg, "normalized_lg"),
    ] {
        if let Some(limit) = limit {
            let s = spread_ratio(values);
            t.check(
                format!("{what} {label} bounded"),
                s <= limit,
                format!("max/min {s:.4}, limit {limit}"),
            );
        }
    }
}

fn matrix_check(c: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let vectors = c.trials_or(1000);
    let seed = c.seed();
    let mut t = ResultTable::new(
        "matrix-check",
        &[
            "n",
            "lg",
            "trace",
            "trace_expected",
            "min_constrained",
            "floor",
            "corollary_ratio",
            "normalized_ratio",
            "prefix_violations",
            "vectors",
            "seed",
        ],
        seed,
    );
    for &n in c.require_ns()? {
        let a = DyadicMatrix::new(n)?;
        let lg = a.lg();
        let trace = a.trace();
        let expected = n as u64 * lg as u64;
        t.check(
            format!("n={n} trace"),
            trace == expected,
            format!("{trace} vs n lg n = {expected}"),
        );
        if n == 8 {
            let same = (1..=8)
                .all(|i| (1..=8).all(|j| a.entry(i, j).ok() == Some(REFERENCE_8[i - 1][j - 1])));
            t.check("n=8 reference matrix", same, "");
        }
        let q = a.prefix_quadratics()?;
        let min_c = q.iter().map(|qi| 1.0 / qi).fold(f64::INFINITY, f64::min);
        let floor = 1.0 / lg as f64;
        t.check(
            format!("n={n} constrained minimum"),
            min_c >= floor - 1e-9,
            format!("{min_c:.6} vs 1/lg n = {floor:.6}"),
        );
        let ratio = a.corollary_ratio()?;
        let normalized = ratio / (n as f64 * (lg * lg) as f64);
        t.check(
            format!("n={n} corollary ratio"),
            normalized > 0.0 && normalized <= 1.0,
            format!("ratio/(n lg^2 n) = {normalized:.6}"),
        );
        let violations: u64 = map_trials(vectors, |v| {
            let mut rng = trial_rng(derive_seed(seed, n as u64), v);
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let form = a.quadratic_form(&x).expect("length matches");
            let mut p = 0.0;
            x.iter().any(|xi| {
                p += xi;
                form < p * p / lg as f64 - 1e-9
            }) as u64
        })
        .into_iter()
        .sum();
        t.check(
            format!("n={n} prefix lower bound"),
            violations == 0,
            format!("{violations} of {vectors} vectors violate"),
        );
        t.push_row(vec![
            n.to_string(),
            lg.to_string(),
            trace.to_string(),
            expected.to_string(),
            num(min_c),
            num(floor),
            num(ratio),
            num(normalized),
            violations.to_string(),
            vectors.to_string(),
            seed.to_string(),
        ]);
    }
    Ok(t)
}

fn maximal_mc(c: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let fam = c.family_or(FamilyConfig::kwise(4));
    let ns = if c.ns.is_empty() {
        vec![1024]
    } else {
        c.ns.clone()
    };
    let multiples = if c.lambdas.is_empty() {
        vec![2.0, 4.0, 8.0]
    } else {
        c.lambdas.clone()
    };
    let decades = c.decades.unwrap_or(4.0);
    let trials = c.trials_or(100_000);
    let seed = c.seed();
    let z = c.assert.z.unwrap_or(3.0);
    let mut t = ResultTable::new(
        "maximal-mc",
        &[
            "n",
            "lambda_multiple",
            "lambda",
            "empirical_p",
            "stderr",
            "bound",
            "fitted_constant",
            "trials",
            "seed",
        ],
        seed,
    );
    for n in ns {
        let row_seed = derive_seed(seed, n as u64);
        let sigmas: Vec<f64> = log_uniform_variances(n, decades, row_seed)
            .iter()
            .map(|v| v.sqrt())
            .collect();
        let norm = sigmas.iter().map(|s| s * s).sum::<f64>().sqrt();
        let lambdas: Vec<f64> = multiples.iter().map(|k| k * norm).collect();
        let table = mc_tail(&fam.spec(n), &sigmas, &lambdas, trials, row_seed)?;
        for (k, r) in multiples.iter().zip(&table.rows) {
            t.push_row(vec![
                n.to_string(),
                num(*k),
                num(r.lambda),
                num(r.empirical_p),
                num(r.stderr),
                num(r.bound),
                num(table.fitted_constant),
                trials.to_string(),
                seed.to_string(),
            ]);
            t.check(
                format!("{} n={n} lambda={k}*norm", table.family),
                r.within_bound(z),
                format!(
                    "p {:.6} +- {:.6} vs bound {:.6}",
                    r.empirical_p, r.stderr, r.bound
                ),
            );
        }
    }
    Ok(t)
}

fn stream_track(c: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let fam = c.family_or(FamilyConfig::kwise(4));
    let ms = c.require_ms()?;
    let order = c.order.unwrap_or(2);
    let trials = c.trials_or(10_000);
    let seed = c.seed();
    let mut t = ResultTable::new(
        "stream-track",
        &[
            "stream",
            "m",
            "n",
            "family",
            "moment_order",
            "mean",
            "stderr",
            "norm_sq",
            "normalized",
            "normalized_lg",
            "trials",
            "seed",
        ],
        seed,
    );
    for kind in c.streams_or_all() {
        let mut normalized = Vec::new();
        let mut normalized_lg = Vec::new();
        for &m in ms {
            let stream = kind.generate(m, m, seed)?;
            let spec = fam.spec(m);
            let e = mc_sup_moment(&stream, &spec, order, trials, derive_seed(seed, m as u64))?;
            let norm_sq = stream.norm_sq();
            let v = e.mean / (norm_sq as f64).powi(order as i32 / 2);
            let vl = v / (stream.lg_m() as f64).powi(order as i32);
            normalized.push(v);
            normalized_lg.push(vl);
            t.push_row(vec![
                kind.to_string(),
                m.to_string(),
                m.to_string(),
                spec.label(),
                order.to_string(),
                num(e.mean),
                num(e.stderr),
                norm_sq.to_string(),
                num(v),
                num(vl),
                trials.to_string(),
                seed.to_string(),
            ]);
        }
        spread_checks(
            &mut t,
            &format!("{kind} {}", fam.spec(ms[0]).label()),
            &normalized,
            &normalized_lg,
            c.assert.max_spread,
            c.assert.max_spread_lg,
        );
    }
    Ok(t)
}

fn net_audit(c: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let fam = c.family_or(FamilyConfig::kwise(4));
    let k = c.order.unwrap_or(4);
    let realizations = c.trials_or(100);
    let seed = c.seed();
    let mut t = ResultTable::new(
        "net-audit",
        &[
            "stream",
            "m",
            "levels",
            "max_size_ratio",
            "coverage",
            "quadratic_min_ratio",
            "kth_min_ratio",
            "realizations",
            "seed",
        ],
        seed,
    );
    for kind in c.streams_or_all() {
        for &m in c.require_ms()? {
            let stream = kind.generate(m, m, seed)?;
            let nets = NetHierarchy::build(&stream);
            let top = nets.top();
            let size_ratio = (0..=top)
                .map(|r| nets.d(r) as f64 / 2f64.powi(r as i32))
                .fold(0.0, f64::max);
            let coverage = (0..=top).all(|r| nets.coverage_check(&stream, r));
            let ck = dominance_constant(k, m)?;
            let sampler = Sampler::new(&fam.spec(m))?;
            let ratios = map_trials(realizations, |trial| {
                let mut h = vec![0i8; m];
                sampler.sample_into(&mut trial_rng(derive_seed(seed, m as u64), trial), &mut h);
                let x: Vec<f64> = h.iter().map(|&v| v as f64).collect();
                let sup = sup_inner(&stream, &x).expect("dimension matches");
                let q = nets
                    .chain_form_quadratic(&stream, &x)
                    .expect("dimension matches");
                let fk = nets.chain_form_k(&stream, &x, k).expect("order checked");
                if sup == 0.0 {
                    (f64::INFINITY, f64::INFINITY)
                } else {
                    (q * top as f64 / (sup * sup), fk / (ck * sup.powi(k as i32)))
                }
            });
            let qmin = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
            let kmin = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            let tol = 1.0 - 1e-12;
            t.check(
                format!("{kind} m={m} level sizes d_r <= 2^r"),
                size_ratio <= 1.0,
                format!("max d_r/2^r = {size_ratio}"),
            );
            t.check(format!("{kind} m={m} coverage"), coverage, "");
            t.check(
                format!("{kind} m={m} quadratic dominance"),
                qmin >= tol,
                format!("min ratio {qmin:.4}"),
            );
            t.check(
                format!("{kind} m={m} order-{k} dominance"),
                kmin >= tol,
                format!("min ratio {kmin:.4}"),
            );
            t.push_row(vec![
                kind.to_string(),
                m.to_string(),
                (top + 1).to_string(),
                num(size_ratio),
                coverage.to_string(),
                num(qmin),
                num(kmin),
                realizations.to_string(),
                seed.to_string(),
            ]);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn family_verify_h16() {
        let t = run(&cfg("kind = \"family-verify\"\nns = [16]")).unwrap();
        assert!(t.all_pass());
        assert!(t
            .assertions
            .iter()
            .any(|a| a.line() == "H n=16 covariance=identity: PASS (max deviation 0)"));
    }

    #[test]
    fn every_stage_holds_exactly() {
        for stage in ["H1", "H2", "H3", "H"] {
            let text = format!("kind = \"family-verify\"\nns = [16, 64]\n[family]\nkind = \"adversarial-stage\"\nstage = \"{stage}\"");
            let t = run(&cfg(&text)).unwrap();
            assert!(t.all_pass(), "{stage}: {:?}", t.assertions);
        }
    }

    #[test]
    fn flipped_g_table_breaks_the_h3_check() {
        let params = adversarial_params(64).unwrap().with_g_sign_flipped(1, 2);
        let m = stage_moments(&params, Stage::H3);
        let checks = exact_stage_checks(&params, &m);
        assert!(checks.iter().any(|(_, _, holds)| !holds));
    }

    #[test]
    fn empirical_family_verify() {
        let t = run(&cfg(
            "kind = \"family-verify\"\nns = [32]\ntrials = 4000\n[family]\nkind = \"polynomial-kwise\"\nk = 2",
        ))
        .unwrap();
        assert!(t.all_pass(), "{:?}", t.assertions);
        assert_eq!(t.rows.len(), 2);
    }

    #[test]
    fn matrix_check_n8() {
        let t = run(&cfg("kind = \"matrix-check\"\nns = [8]\ntrials = 50")).unwrap();
        assert!(t.all_pass(), "{:?}", t.assertions);
        assert_eq!(t.rows[0][2], "24");
        assert!(t
            .assertions
            .iter()
            .any(|a| a.line() == "n=8 reference matrix: PASS"));
    }

    #[test]
    fn walk_scaling_rows_and_threshold_evaluation() {
        let t = run(&cfg(
            "kind = \"walk-scaling\"\nns = [16, 64, 256]\ntrials = 200\n[assert]\nmax_spread = 1000.0\nmin_r2 = 2.0",
        ))
        .unwrap();
        assert_eq!(t.rows.len(), 3);
        let spread = t
            .assertions
            .iter()
            .find(|a| a.name.ends_with("normalized bounded"))
            .unwrap();
        assert!(spread.pass);
        let growth = t
            .assertions
            .iter()
            .find(|a| a.name.contains("growth"))
            .unwrap();
        assert!(!growth.pass, "R2 can never reach 2");
    }

    #[test]
    fn bad_parameters_surface_module_errors() {
        let err = run(&cfg("kind = \"walk-scaling\"\nns = [16, 32]")).unwrap_err();
        assert!(err.to_string().contains("power"), "{err}");
        let err = run(&cfg("kind = \"maximal-mc\"\nns = [64]\ntrials = 10\n[family]\nkind = \"polynomial-kwise\"\nk = 2")).unwrap_err();
        assert!(err.to_string().contains("4-wise"), "{err}");
        assert!(matches!(
            run(&cfg("kind = \"net-audit\"")),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn small_net_audit_and_stream_track() {
        let t = run(&cfg("kind = \"net-audit\"\nms = [16, 64]\ntrials = 20")).unwrap();
        assert!(t.all_pass(), "{:?}", t.assertions);
        assert_eq!(t.rows.len(), 10);
        let t = run(&cfg(
            "kind = \"stream-track\"\nms = [16, 64]\nstreams = [\"identity\"]\ntrials = 200",
        ))
        .unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.assertions.is_empty());
    }

    #[test]
    fn maximal_mc_small() {
        let t = run(&cfg(
            "kind = \"maximal-mc\"\nns = [64]\ntrials = 2000\nlambdas = [2.0, 4.0]",
        ))
        .unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.all_pass(), "{:?}", t.assertions);
    }
}
