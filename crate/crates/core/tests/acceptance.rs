//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any fails.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use autoqec::code_search::search_code;
use autoqec::engine::build_correctable_basis;
use autoqec::lindblad::{integrate, superoperator_matrix, unvectorize, vectorize, SimulationConfig};
use autoqec::linalg::{expm, group_spectrum, product_state, Ket, Operator, DEFAULT_CLUSTER_TOLERANCE};
use autoqec::noise::build_error_structure;
use autoqec::scalar::cplx;
use autoqec::scenario::{preset, run, RunOptions, RunResult, Scenario, Sweep, PRESET_NAMES};
use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Full preset runs are shared between criteria.
fn full_run(name: &str) -> &'static RunResult {
    static CACHE: OnceLock<Mutex<HashMap<String, &'static RunResult>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(name) {
        return r;
    }
    let s = preset(name).unwrap();
    let r: &'static RunResult = Box::leak(Box::new(run(&s, &RunOptions::full()).unwrap()));
    cache.lock().unwrap().insert(name.to_string(), r);
    r
}

fn basis_label_index(label: &str) -> usize {
    usize::from_str_radix(label, 2).unwrap()
}

fn ket_from(terms: &[(&str, f64)]) -> Ket<f64> {
    let mut k = Ket::zeros(1 << terms[0].0.len());
    for &(label, amp) in terms {
        k.axpy(cplx(amp, 0.0), &product_state(label).unwrap());
    }
    k
}

fn c1_code_search() -> Outcome {
    let s = preset("fig2-correlated-dephasing").unwrap();
    let h = s.hamiltonian_operator().unwrap();
    let model = s.noise_model().unwrap();
    let start = Instant::now();
    let spectrum = group_spectrum(&h, DEFAULT_CLUSTER_TOLERANCE).unwrap();
    let errs = build_error_structure(&model, 1).unwrap();
    let found = search_code(&spectrum, &errs).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let Some(code) = found.code else {
        return outcome(false, "search found no code");
    };
    let gap = code.logical_gap();
    let found_residual = pair_residual(&spectrum, &errs, &code);
    // hand-assembled A-matrix on the one- and two-excitation basis states
    let plus = ["001", "010", "100"].map(basis_label_index);
    let minus = ["011", "101", "110"].map(basis_label_index);
    let a = a_matrix_on_basis_states(&errs, &plus, &minus);
    let reference_residual = a.constraint_residual(&[0.3, 0.3, 0.4], &[0.4, 0.3, 0.3]);
    let pass = (gap - 2.0).abs() < 1e-9 && found_residual < 1e-8 && reference_residual < 1e-8 && elapsed < 1.0;
    outcome(
        pass,
        format!(
            "gap {gap:.3}, p_i {:?}, p_j {:?}, found residual {found_residual:.1e}, reference p residual {reference_residual:.1e}, {elapsed:.3}s",
            code.p_i.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            code.p_j.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
        ),
    )
}

fn c2_gram_schmidt() -> Outcome {
    let start = Instant::now();
    let s = preset("fig2-correlated-dephasing").unwrap();
    let p = parts(&s, 100.0, 1);
    let code = p.code.as_ref().unwrap();
    let errs = build_error_structure(&p.model, 1).unwrap();
    let basis = build_correctable_basis(code, &errs, 1).unwrap();
    let expected = [
        (0, 0, ket_from(&[("100", -(12.0f64 / 22.0).sqrt()), ("010", (9.0f64 / 22.0).sqrt()), ("001", (1.0f64 / 22.0).sqrt())])),
        (0, 1, ket_from(&[("100", -(3.0f64 / 55.0).sqrt()), ("010", -(16.0f64 / 55.0).sqrt()), ("001", (36.0f64 / 55.0).sqrt())])),
        (1, 0, ket_from(&[("011", (12.0f64 / 22.0).sqrt()), ("101", -(9.0f64 / 22.0).sqrt()), ("110", -(1.0f64 / 22.0).sqrt())])),
        (1, 1, ket_from(&[("011", (3.0f64 / 55.0).sqrt()), ("101", (16.0f64 / 55.0).sqrt()), ("110", -(36.0f64 / 55.0).sqrt())])),
    ];
    let mut worst: f64 = 0.0;
    for (alpha, i, want) in &expected {
        let got = &basis.error_basis(1, *alpha)[*i];
        let err = got.max_abs_diff(want).min(got.max_abs_diff(&want.scaled(cplx(-1.0, 0.0))));
        worst = worst.max(err);
    }
    let residual = Operator::projector(&[Ket::basis(8, 0), Ket::basis(8, 7)], 8);
    let res_err = basis.residual_projector().max_abs_diff(&residual);

    let s3 = preset("fig3-repetition").unwrap();
    let p3 = parts(&s3, 100.0, 2);
    let b3 = p3.scheme.as_ref().unwrap().basis();
    let p = b3.p();
    let counts = (p[1], p[2], b3.q_max());
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 1e-9 && res_err < 1e-9 && counts == (5, 10, 0) && elapsed < 1.0;
    outcome(
        pass,
        format!(
            "max closed-form deviation {worst:.1e}, residual projector deviation {res_err:.1e}, 5-qubit c=2 (p1, p2, q_max) = {counts:?}, {elapsed:.3}s"
        ),
    )
}

struct Expected {
    name: &'static str,
    kl: Option<bool>,
    hnls: bool,
    p1p2: Option<(bool, bool)>,
    search_fails: bool,
}

fn c3_truth_table() -> Outcome {
    let table = [
        Expected { name: "fig2-correlated-dephasing", kl: Some(true), hnls: true, p1p2: None, search_fails: false },
        Expected { name: "fig3-repetition", kl: Some(true), hnls: true, p1p2: None, search_fails: false },
        Expected { name: "sm-s3b-sufficient", kl: Some(true), hnls: true, p1p2: Some((true, true)), search_fails: false },
        Expected { name: "sm-s3b-p1-violated", kl: Some(true), hnls: true, p1p2: Some((false, true)), search_fails: false },
        Expected { name: "sm-s3b-p2-violated", kl: Some(true), hnls: true, p1p2: Some((true, false)), search_fails: false },
        Expected { name: "sm-s3a-hnls-ok", kl: Some(true), hnls: true, p1p2: None, search_fails: false },
        Expected { name: "sm-s3a-hnls-violated", kl: None, hnls: false, p1p2: None, search_fails: false },
        Expected { name: "sm-s4a-infeasible", kl: None, hnls: true, p1p2: None, search_fails: true },
    ];
    let mut mismatches = Vec::new();
    for e in &table {
        let s = preset(e.name).unwrap();
        let r = run(&s, &RunOptions::diagnostics_only()).unwrap().report;
        if r.hnls.satisfied != e.hnls {
            mismatches.push(format!(
                "{}: HNLS {} (expected {}, |H_perp| = {:.2e})",
                e.name, r.hnls.satisfied, e.hnls, r.hnls.perp_norm
            ));
        }
        if r.search_failed != e.search_fails {
            mismatches.push(format!("{}: search_failed {}", e.name, r.search_failed));
        }
        if let Some(kl) = e.kl {
            for o in &r.orders {
                if o.kl.satisfied != kl {
                    mismatches.push(format!("{}: KL {} at c = {}", e.name, o.kl.satisfied, o.c));
                }
            }
        }
        if let Some(want) = e.p1p2 {
            let got = r.orders[0].properties.as_ref().map(|p| (p.p1, p.p2));
            if got != Some(want) {
                mismatches.push(format!("{}: (P1, P2) = {got:?}, expected {want:?}", e.name));
            }
        }
    }
    if mismatches.is_empty() {
        outcome(true, format!("{} presets match", table.len()))
    } else {
        outcome(false, mismatches.join("; "))
    }
}

fn c4_noiseless() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (name, c) in [("fig2-correlated-dephasing", 1), ("fig3-repetition", 1)] {
        let mut s = preset(name).unwrap();
        s.kappa = 0.0;
        s.r = Sweep::One(100.0);
        s.c = Sweep::One(c);
        s.scaling = None;
        let result = run(&s, &RunOptions { curves: true, ..Default::default() }).unwrap();
        let h = s.hamiltonian_operator().unwrap();
        let psi = s.probe_state(&s.explicit_code(&h).unwrap().unwrap()).unwrap();
        for rec in result.curves.iter().chain(result.noqec.iter()) {
            for (&t, &f) in rec.curve.times.iter().zip(&rec.curve.qfi) {
                worst = worst.max((f - variance_qfi(&h, &psi, t)).abs() / f.max(1.0));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-3 && elapsed < 30.0,
        format!("max relative deviation {worst:.2e} (sum-Z and product-Z), {elapsed:.1}s"),
    )
}

/// Largest violation of `a[k] >= b[k] - slack[k]` over samples with t > 0.
fn dominance_violation(a: &[f64], b: &[f64], slack: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(slack)
        .skip(1)
        .map(|((x, y), s)| y - s - x)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn c5_fig2_ordering() -> Outcome {
    let start = Instant::now();
    let r = full_run("fig2-correlated-dephasing");
    let f = |rr: f64| r.curve(rr, 1).unwrap();
    let (f100, f200, f400) = (f(100.0), f(200.0), f(400.0));
    let noqec = r.noqec.as_ref().unwrap();
    let slack: Vec<f64> = f100.ideal.iter().map(|x| 1e-3 * x).collect();
    let v = [
        dominance_violation(&f400.curve.qfi, &f200.curve.qfi, &slack),
        dominance_violation(&f200.curve.qfi, &f100.curve.qfi, &slack),
        dominance_violation(&f100.curve.qfi, &noqec.curve.qfi, &slack),
    ];
    let ratio = f400.curve.last().unwrap() / f400.ideal.last().unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        v.iter().all(|&x| x <= 0.0) && ratio > 0.9 && elapsed < 600.0,
        format!(
            "F(5): R400 {:.2}, R200 {:.2}, R100 {:.2}, noQEC {:.2}, ideal {:.2}; F_R400/F_id = {ratio:.4}; worst ordering margin {:.2e}, {elapsed:.1}s",
            f400.curve.last().unwrap(),
            f200.curve.last().unwrap(),
            f100.curve.last().unwrap(),
            noqec.curve.last().unwrap(),
            f400.ideal.last().unwrap(),
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
    )
}

fn c6_fig3_ordering() -> Outcome {
    let start = Instant::now();
    let r = full_run("fig3-repetition");
    let (c1, c2) = (r.curve(100.0, 1).unwrap(), r.curve(100.0, 2).unwrap());
    let slack: Vec<f64> = c1.ideal.iter().map(|x| 1e-3 * x).collect();
    let v = dominance_violation(&c2.curve.qfi, &c1.curve.qfi, &slack);
    let id = c1.ideal.last().unwrap();
    let (r1, r2) = (c1.curve.last().unwrap() / id, c2.curve.last().unwrap() / id);
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        v <= 0.0 && r2 > r1 && elapsed < 900.0,
        format!("F(5)/F_id: c=1 {r1:.4}, c=2 {r2:.4}; worst ordering margin {v:.2e}, {elapsed:.1}s"),
    )
}

fn c7_scaling() -> Outcome {
    let mut parts_out = Vec::new();
    let mut pass = true;
    for (name, want) in [("fig2-correlated-dephasing", 1.0), ("fig3-repetition", 2.0)] {
        let sc = full_run(name).report.scaling.as_ref().unwrap();
        let ok = !sc.flagged
            && sc.resolvable == Some(true)
            && sc.fitted_c.is_some_and(|c| (c - want).abs() <= 0.3);
        pass &= ok;
        parts_out.push(format!(
            "{name}: R {:?}, eps {:?}, fitted c {:?} (target {want}), max integrator error {:.1e}",
            sc.r_values,
            sc.eps.iter().map(|e| (e * 1e4).round() / 1e4).collect::<Vec<_>>(),
            sc.fitted_c.map(|c| (c * 1e3).round() / 1e3),
            sc.integrator_error.as_ref().map_or(f64::NAN, |v| v.iter().cloned().fold(0.0, f64::max)),
        ));
    }
    outcome(pass, parts_out.join("; "))
}

fn c8_data_processing() -> Outcome {
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for name in PRESET_NAMES {
        let r = full_run(name);
        for rec in r.curves.iter().chain(r.noqec.iter()) {
            for (k, &f) in rec.curve.qfi.iter().enumerate() {
                let id = rec.ideal[k];
                let slack = 1e-4 * id + 1e-8;
                let proj_ok = rec.projected.as_ref().is_none_or(|p| p.qfi[k] <= f + slack);
                if !(proj_ok && f <= id + slack) {
                    failures.push(format!("{name}/{} t={}", rec.label, rec.curve.times[k]));
                }
                checked += 1;
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} samples over {} presets (sm-s4a-infeasible has no curves)", PRESET_NAMES.len())
        } else {
            failures.join(", ")
        },
    )
}

fn c9_hnls_dichotomy() -> Outcome {
    let ok = full_run("sm-s3a-hnls-ok").curve(1e4, 1).unwrap();
    let bad = full_run("sm-s3a-hnls-violated").curve(1e4, 1).unwrap();
    let ratios = |rec: &autoqec::scenario::CurveRecord, keep: &dyn Fn(f64) -> bool| -> Vec<f64> {
        rec.curve
            .times
            .iter()
            .zip(&rec.curve.qfi)
            .zip(&rec.ideal)
            .filter(|((t, _), _)| **t > 0.0 && keep(**t))
            .map(|((_, f), id)| f / id)
            .collect()
    };
    let r_ok = ratios(ok, &|t| t <= 5.0);
    let r_bad = ratios(bad, &|t| t >= 1.0);
    let min_ok = r_ok.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_bad = r_bad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let horizon = ok.curve.times.last().unwrap();
    outcome(
        min_ok > 0.95 && max_bad < 0.05,
        format!("HNLS-ok min F/F_id {min_ok:.4}, HNLS-violated max F/F_id {max_bad:.2e} (horizon T = {horizon})"),
    )
}

fn c10_s3b_ordering() -> Outcome {
    let get = |n: &str| full_run(n).curve(100.0, 1).unwrap();
    let (suff, p1, p2) = (get("sm-s3b-sufficient"), get("sm-s3b-p1-violated"), get("sm-s3b-p2-violated"));
    let slack: Vec<f64> = suff.ideal.iter().map(|x| 1e-3 * x).collect();
    let a = dominance_violation(&p1.curve.qfi, &p2.curve.qfi, &slack);
    let b = dominance_violation(&suff.curve.qfi, &p1.curve.qfi, &slack);
    outcome(
        a <= 0.0 && b <= 0.0,
        format!(
            "F(5): sufficient {:.2}, P1-violated {:.2}, P2-violated {:.2}; worst margins {a:.2e}, {b:.2e}",
            suff.curve.last().unwrap(),
            p1.curve.last().unwrap(),
            p2.curve.last().unwrap()
        ),
    )
}

fn c11_integrator_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for name in PRESET_NAMES {
        let s: Scenario = preset(name).unwrap();
        let d = 1usize << s.total_qubits();
        if d > 16 {
            continue;
        }
        names.push(*name);
        let r = s.r_values()[0];
        let p = parts(&s, r, s.orders()[0]);
        let s_mat = superoperator_matrix(&p.h, &p.model, p.scheme.as_ref(), &SimulationConfig::new(s.w, s.kappa, r, 1.0));
        for t in [0.1, 1.0] {
            let mut cfg = SimulationConfig::new(s.w, s.kappa, r, t);
            cfg.record_every = usize::MAX;
            let rk4 = integrate(&p.rho0, &p.h, p.scheme.as_ref(), &p.model, &cfg).unwrap();
            let exact = unvectorize(&expm(&s_mat.scaled_real(t)).apply(&vectorize(&p.rho0)), d);
            worst = worst.max(rk4.final_state().max_abs_diff(&exact));
        }
    }
    outcome(worst < 1e-6, format!("max entry deviation {worst:.2e} over {} presets {names:?}", names.len()))
}

fn c12_lp_equivalence() -> Outcome {
    let mut r = rng(0xA11CE);
    let (mut feasible, mut infeasible, mut rechecked, mut disagreements) = (0, 0, 0, 0);
    for k in 0..40 {
        let a = random_lp_instance(&mut r, k % 2 == 0);
        let v = lp_oracle(&a);
        if v.exact.is_some() {
            rechecked += 1;
        }
        if !v.agrees() {
            disagreements += 1;
        }
        if v.simplex {
            feasible += 1;
        } else {
            infeasible += 1;
        }
    }
    outcome(
        disagreements == 0,
        format!("40 instances ({feasible} feasible, {infeasible} infeasible), {rechecked} exact rechecks, {disagreements} disagreements"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("code search reproduction", c1_code_search),
        ("Gram-Schmidt oracle", c2_gram_schmidt),
        ("KL/HNLS/P1/P2 truth table", c3_truth_table),
        ("noiseless consistency", c4_noiseless),
        ("correlated dephasing ordering in R", c5_fig2_ordering),
        ("repetition code ordering in c", c6_fig3_ordering),
        ("scaling law exponent", c7_scaling),
        ("data-processing inequality", c8_data_processing),
        ("HNLS dichotomy", c9_hnls_dichotomy),
        ("P1/P2 violation ordering", c10_s3b_ordering),
        ("integrator vs matrix exponential", c11_integrator_oracle),
        ("LP brute-force equivalence", c12_lp_equivalence),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} [{:.1}s]: {}",
            k + 1,
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
