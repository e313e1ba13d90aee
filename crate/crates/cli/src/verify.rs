//! The deterministic invariant suite behind `kwise verify`. No Monte Carlo:
//! every check is exact arithmetic or an exhaustive enumeration, and the
//! only randomness is a fixed seed choosing test inputs.

use clap::ValueEnum;
use kwise_core::dyadic_matrix::DyadicMatrix;
use kwise_core::maximal_inequality::{
    chain_path, log_uniform_variances, IntervalTree, VarianceProfile,
};
use kwise_core::rng::{derive_seed, trial_rng};
use kwise_core::sign_families::{adversarial_params, stage_moments, Rational};
use kwise_core::streams::{mz_moment_exact, NetHierarchy, StreamKind};
use kwise_core::walks::prefix_sums;
use kwise_core::Stage;
use num_bigint::BigInt;
use rand::Rng;
use serde::Serialize;

use crate::experiments::{exact_stage_checks, REFERENCE_8};
use crate::table::Assertion;

const SEED: u64 = 0x006b_7769_7365;

/// Deliberate corruptions used to show that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Mutation {
    /// Negate one off-diagonal entry of the H2 block-covariance table before
    /// the H3 pair modes are derived from it.
    GtableSign,
}

pub fn verify_suite(mutation: Option<Mutation>) -> Vec<Assertion> {
    let mut out = Vec::new();
    pairwise_family(&mut out, mutation);
    fourth_moment_oracle(&mut out);
    matrix(&mut out);
    intervals(&mut out);
    nets(&mut out);
    out
}

fn pairwise_family(out: &mut Vec<Assertion>, mutation: Option<Mutation>) {
    for n in [16usize, 64, 256] {
        let mut params = adversarial_params(n).expect("valid n");
        if mutation == Some(Mutation::GtableSign) {
            params = params.with_g_sign_flipped(1, 2);
        }
        for stage in [Stage::H1, Stage::H2, Stage::H3, Stage::H] {
            let m = stage_moments(&params, stage);
            for (check, value, holds) in exact_stage_checks(&params, &m) {
                let detail = if holds {
                    String::new()
                } else {
                    format!("max deviation {value}")
                };
                out.push(Assertion::new(
                    format!("{stage} n={n} {check}"),
                    holds,
                    detail,
                ));
            }
        }
    }
}

fn fourth_moment_oracle(out: &mut Vec<Assertion>) {
    let mut rng = trial_rng(derive_seed(SEED, 1), 0);
    let mut bad = 0;
    for _ in 0..5 {
        let v: Vec<i64> = (0..16).map(|_| rng.random_range(-9..=9)).collect();
        let norm_sq: BigInt = v.iter().map(|&x| BigInt::from(x * x)).sum();
        let fourth: BigInt = v.iter().map(|&x| BigInt::from(x).pow(4)).sum();
        let want = Rational::from_integer(
            BigInt::from(3) * &norm_sq * &norm_sq - BigInt::from(2) * fourth,
        );
        let got = mz_moment_exact(&v, 4).expect("16 coordinates");
        if got.exact.as_ref() != Some(&want) || !got.holds {
            bad += 1;
        }
    }
    out.push(Assertion::new(
        "GF(16) 4-wise fourth moment = 3|v|^4 - 2 sum v^4",
        bad == 0,
        if bad == 0 {
            String::new()
        } else {
            format!("{bad} of 5 vectors differ")
        },
    ));
}

fn matrix(out: &mut Vec<Assertion>) {
    let traces = (2..=12u32).all(|lg| {
        let n = 1usize << lg;
        DyadicMatrix::new(n)
            .map(|a| a.trace() == n as u64 * lg as u64)
            .unwrap_or(false)
    });
    out.push(Assertion::new(
        "matrix trace = n lg n for n = 4..4096",
        traces,
        "",
    ));

    let a8 = DyadicMatrix::new(8).expect("n = 8");
    let same =
        (1..=8).all(|i| (1..=8).all(|j| a8.entry(i, j).ok() == Some(REFERENCE_8[i - 1][j - 1])));
    out.push(Assertion::new("matrix n=8 matches reference", same, ""));
    let blocks = a8
        .dense_from_blocks()
        .map(|d| (0..8).all(|i| (0..8).all(|j| d[(i, j)] == REFERENCE_8[i][j])))
        .unwrap_or(false);
    out.push(Assertion::new(
        "matrix n=8 block construction agrees",
        blocks,
        "",
    ));

    let mut failures = Vec::new();
    for lg in 2..=10u32 {
        let n = 1usize << lg;
        let a = DyadicMatrix::new(n).expect("power of two");
        let q = a.prefix_quadratics().expect("positive definite");
        if q.iter().any(|&qi| 1.0 / qi < 1.0 / lg as f64 - 1e-9) {
            failures.push(format!("constrained min n={n}"));
        }
        let r = a.corollary_ratio().expect("positive definite") / (n as f64 * (lg * lg) as f64);
        if !(r > 0.0 && r <= 1.0) {
            failures.push(format!("ratio n={n}"));
        }
    }
    out.push(Assertion::new(
        "matrix constrained minimum >= 1/lg n and ratio in (0, 1] for n <= 1024",
        failures.is_empty(),
        failures.join(", "),
    ));
}

fn intervals(out: &mut Vec<Assertion>) {
    let mut invariant_failures = Vec::new();
    let mut chain_failures = Vec::new();
    let mut worst = 0.0f64;
    for p in 0..200u64 {
        let variances = log_uniform_variances(256, 4.0, derive_seed(SEED, 100 + p));
        let tree = match VarianceProfile::from_variances(&variances)
            .and_then(|v| IntervalTree::build(&v))
        {
            Ok(t) => t,
            Err(e) => {
                invariant_failures.push(format!("profile {p}: {e}"));
                continue;
            }
        };
        if let Err(e) = tree.check_invariants() {
            invariant_failures.push(format!("profile {p}: {e}"));
        }
        for q in 1..=tree.max_rank() {
            worst = worst.max(tree.bad_mass(q) / 0.9f64.powi(q as i32));
        }
        let mut rng = trial_rng(derive_seed(SEED, 2), p);
        let signs: Vec<i8> = (0..256)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let s = prefix_sums(&signs);
        let ok = (0..=256).all(|i| {
            chain_path(&tree, &s, i)
                .map(|c| c.telescope(&s) == s[i] && c.is_well_formed(&tree))
                .unwrap_or(false)
        });
        if !ok {
            chain_failures.push(p.to_string());
        }
    }
    out.push(Assertion::new(
        "interval tree invariants on 200 profiles",
        invariant_failures.is_empty(),
        invariant_failures.join("; "),
    ));
    out.push(Assertion::new(
        "interval tree bad mass <= 0.9^q",
        worst <= 1.0 + 1e-12,
        format!("max ratio {worst:.4}"),
    ));
    out.push(Assertion::new(
        "chain paths telescope exactly",
        chain_failures.is_empty(),
        if chain_failures.is_empty() {
            String::new()
        } else {
            format!("profiles {}", chain_failures.join(","))
        },
    ));
}

fn nets(out: &mut Vec<Assertion>) {
    for kind in StreamKind::ALL {
        let mut failures = Vec::new();
        for lg in 4..=12u32 {
            let m = 1usize << lg;
            let stream = kind
                .generate(m, m, SEED)
                .expect("valid generator parameters");
            let nets = NetHierarchy::build(&stream);
            for r in 0..=nets.top() {
                if nets.d(r) > 1 << r || !nets.coverage_check(&stream, r) {
                    failures.push(format!("m={m} r={r}"));
                }
            }
        }
        out.push(Assertion::new(
            format!("{kind} nets: d_r <= 2^r and coverage for m = 16..4096"),
            failures.is_empty(),
            failures.join(", "),
        ));
    }
}
