//! Acceptance criteria 1-8. Prints one `criterion N: PASS|FAIL` line each and
//! exits non-zero if any fails.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;
use std::process::ExitCode;

use mlae::conventional::conventional_error;
use mlae::experiments::{
    run_appendix_comparison, run_sweep, simulate_errors, summarize, to_csv, AppendixConfig,
    SweepConfig, CONVENTIONAL_LABEL,
};
use mlae::montecarlo::{
    amplified_ancilla_probability, ancilla_probabilities, estimate_from_probabilities, exact_sum,
    q_matrix_from_circuit, q_matrix_literal, IntegralProblem,
};
use mlae::{
    fisher_information, fisher_oracle, fit_error_exponent, good_probability, make_schedule,
    BoundReport, Execution, MLConfig, Schedule, ScheduleKind,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn slope(kind: ScheduleKind, m_values: Vec<u32>, reps: usize) -> (f64, usize) {
    let curve = run_sweep(&SweepConfig {
        a_targets: vec![1.0 / 48.0],
        kind,
        m_values,
        shots: 100,
        repetitions: reps,
        seed: 2020,
        ..SweepConfig::default()
    })
    .unwrap();
    let pts: Vec<(f64, f64)> = curve
        .rows
        .iter()
        .map(|r| (r.n_queries as f64, r.rmse.unwrap()))
        .collect();
    let fit = fit_error_exponent(&pts, (1e3, 1e5)).unwrap();
    (fit.gamma, fit.points_used)
}

fn criterion_1_slopes() -> Verdict {
    let reps = 200;
    let (eis, eis_n) = slope(ScheduleKind::Eis, (3..=8).collect(), reps);
    let (lis, lis_n) = slope(ScheduleKind::Lis, vec![3, 5, 7, 10, 14, 19, 25, 30], reps);
    let (cls, cls_n) = slope(
        ScheduleKind::Classical,
        vec![9, 19, 49, 99, 199, 499, 999],
        reps,
    );
    let ok_eis = (eis + 0.95).abs() <= 0.10;
    let ok_lis = (lis + 0.76).abs() <= 0.10;
    let ok_cls = (cls + 0.50).abs() <= 0.05;
    verdict(ok_eis && ok_lis && ok_cls,
        format!(
            "gamma EIS {eis:.3} ({eis_n} pts), LIS {lis:.3} ({lis_n} pts), classical {cls:.3} ({cls_n} pts)"
        ),
    )
}

fn criterion_2_fisher_oracle() -> Verdict {
    let mut instances: Vec<(Schedule, f64)> = Vec::new();
    for &a in &[0.02, 1.0 / 6.0, 0.3, 0.5, 0.77] {
        instances.push((make_schedule(ScheduleKind::Eis, 3, 9).unwrap(), a));
        instances.push((make_schedule(ScheduleKind::Lis, 2, 20).unwrap(), a));
        instances.push((make_schedule(ScheduleKind::Classical, 0, 500).unwrap(), a));
        instances.push((Schedule::custom([(0, 4), (2, 6), (5, 30)]).unwrap(), a));
    }
    let mut worst: f64 = 0.0;
    for (s, a) in &instances {
        let outcomes: u64 = s.shots().map(|n| n + 1).product();
        assert!(outcomes <= 10_000);
        let closed = fisher_information(s, *a).unwrap();
        let oracle = fisher_oracle(s, *a, Execution::default()).unwrap();
        worst = worst.max((closed - oracle).abs() / closed);
    }
    let pass = instances.len() >= 20 && worst <= 1e-9;
    verdict(
        pass,
        format!(
            "{} instances, worst relative gap {worst:.2e}",
            instances.len()
        ),
    )
}

fn criterion_3_amplitude_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=4 {
        for b in [PI / 8.0, PI / 4.0, PI / 2.0] {
            let problem = IntegralProblem::new(n, b).unwrap();
            let theta = exact_sum(&problem).sqrt().asin();
            for m in 0..=16u64 {
                let circuit = amplified_ancilla_probability(&problem, m).unwrap();
                let model = good_probability(theta, m).unwrap();
                worst = worst.max((circuit - model).abs());
                cases += 1;
            }
        }
    }
    let pass = worst <= 1e-10;
    verdict(pass, format!("{cases} cases, worst gap {worst:.2e}"))
}

fn criterion_4_operator_equivalence() -> Verdict {
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        for b in [PI / 8.0, PI / 4.0, PI / 2.0] {
            let problem = IntegralProblem::new(n, b).unwrap();
            let circuit = q_matrix_from_circuit(&problem).unwrap();
            worst = worst.max(circuit.max_abs_diff(&q_matrix_literal(&problem)));
        }
    }
    let pass = worst <= 1e-12;
    verdict(pass, format!("worst elementwise gap {worst:.2e}"))
}

fn criterion_5_monte_carlo() -> Verdict {
    let problem = IntegralProblem::new(2, PI / 4.0).unwrap();
    let exact = exact_sum(&problem);
    let oracle = 0.179635569032311727650489;
    let schedule = make_schedule(ScheduleKind::Eis, 8, 100).unwrap();
    let probs = ancilla_probabilities(&problem, &schedule).unwrap();
    let bound = BoundReport::new(&schedule, exact).unwrap().crb_error;
    let ml = MLConfig::default();
    let within = (0..100u64)
        .filter(|&seed| {
            let est = estimate_from_probabilities(&problem, &schedule, &probs, &ml, seed).unwrap();
            (est.s_hat - exact).abs() <= 3.0 * bound
        })
        .count();
    let sum_gap = (exact - oracle).abs();
    let pass = within >= 95 && sum_gap <= 1e-12;
    verdict(
        pass,
        format!("{within}/100 trials within 3 CRB, exact_sum gap {sum_gap:.2e}"),
    )
}

fn criterion_6_efficiency() -> Verdict {
    let a = 1.0 / 6.0;
    let reps = 500;
    let ml = MLConfig::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for m in 6..=8 {
        let schedule = make_schedule(ScheduleKind::Eis, m, 100).unwrap();
        let bounds = BoundReport::new(&schedule, a).unwrap();
        assert!(bounds.n_queries >= 10_000);
        let errors = simulate_errors(
            ScheduleKind::Eis,
            a,
            m,
            100,
            reps,
            6,
            &ml,
            Execution::default(),
        )
        .unwrap();
        let rmse = summarize(&errors, 81.0).unwrap().rmse;
        let ratio = rmse / bounds.crb_error;
        pass &= (1.0..=1.5).contains(&ratio);
        lines.push(format!("M={m} N_q={} ratio {ratio:.3}", bounds.n_queries));
    }
    // sampling s.e. of the ratio is about 1/sqrt(2 reps)
    let se = 1.0 / (2.0 * reps as f64).sqrt();
    verdict(pass, format!("{} (s.e. {se:.3})", lines.join(", ")))
}

/// Log-log interpolation of `curve` (sorted by `N_q`) at `x`.
fn loglog_interp(curve: &[(f64, f64)], x: f64) -> f64 {
    let i = curve
        .windows(2)
        .position(|w| w[0].0 <= x && x <= w[1].0)
        .expect("x inside curve");
    let (x0, y0) = curve[i];
    let (x1, y1) = curve[i + 1];
    let t = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
    (y0.ln() + t * (y1.ln() - y0.ln())).exp()
}

fn criterion_7_conventional_comparison() -> Verdict {
    let a = 1.0 / 48.0;
    let conventional: Vec<(f64, f64)> = (5..=18)
        .map(|m| {
            let p = conventional_error(a, m).unwrap();
            (p.n_queries as f64, p.worst_error)
        })
        .collect();
    let conv_fit = fit_error_exponent(&conventional, (0.0, f64::INFINITY)).unwrap();

    let curve = run_appendix_comparison(&AppendixConfig {
        a,
        conventional_m: (5..=18).collect(),
        eis_shots: vec![30],
        eis_m: (0..=10).collect(),
        classical_m: vec![0, 1, 3],
        repetitions: 1000,
        seed: 30,
        ..AppendixConfig::default()
    })
    .unwrap();
    let conv_curve: Vec<(f64, f64)> = curve
        .series(CONVENTIONAL_LABEL, a)
        .map(|r| (r.n_queries as f64, r.percentile_error))
        .collect();
    let mut worst_factor: f64 = 1.0;
    let mut compared = 0;
    for r in curve.series("eis_shots30", a) {
        let nq = r.n_queries as f64;
        if !(1e3..=1e5).contains(&nq) {
            continue;
        }
        let conv = loglog_interp(&conv_curve, nq);
        let ratio = r.percentile_error / conv;
        worst_factor = worst_factor.max(ratio.max(1.0 / ratio));
        compared += 1;
    }
    let slope_ok = (conv_fit.gamma + 1.0).abs() <= 0.05;
    let track_ok = compared >= 3 && worst_factor <= 4.0;
    verdict(slope_ok && track_ok,
        format!(
            "conventional gamma {:.3}, EIS N=30 within factor {worst_factor:.2} at {compared} points",
            conv_fit.gamma
        ),
    )
}

fn criterion_8_determinism() -> Verdict {
    let config = |execution| SweepConfig {
        a_targets: vec![1.0 / 48.0, 1.0 / 6.0],
        kind: ScheduleKind::Eis,
        m_values: (0..=4).collect(),
        shots: 50,
        repetitions: 40,
        seed: 8,
        execution,
        ..SweepConfig::default()
    };
    let serial = to_csv(&run_sweep(&config(Execution::Serial)).unwrap());
    let parallel = to_csv(&run_sweep(&config(Execution::Parallel)).unwrap());
    let rerun = to_csv(&run_sweep(&config(Execution::Parallel)).unwrap());
    let pass = serial == parallel && parallel == rerun;
    verdict(
        pass,
        format!("{} CSV bytes, serial == parallel == rerun", serial.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [fn() -> Verdict; 8] = [
        criterion_1_slopes,
        criterion_2_fisher_oracle,
        criterion_3_amplitude_identity,
        criterion_4_operator_equivalence,
        criterion_5_monte_carlo,
        criterion_6_efficiency,
        criterion_7_conventional_comparison,
        criterion_8_determinism,
    ];
    let mut failed = 0;
    for (i, criterion) in criteria.iter().enumerate() {
        let v = criterion();
        failed += usize::from(!v.pass);
        println!(
            "criterion {}: {} {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {}/8 criteria pass", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
