//! Example-level checks that need full simulations or large oracles.

use std::f64::consts::FRAC_PI_2;

use mlae::experiments::{
    eis_label, run_appendix_comparison, run_sweep, simulate_errors, summarize, to_csv,
    AppendixConfig, ErrorCurve, SweepConfig, CONVENTIONAL_LABEL,
};
use mlae::mle::exhaustive_argmax;
use mlae::{
    make_schedule, ml_estimate, sample_counts, Amplitude, BoundReport, Execution, MLConfig,
    ScheduleKind,
};

#[test]
fn staged_search_matches_ten_million_point_grid() {
    let schedule = make_schedule(ScheduleKind::Eis, 6, 100).unwrap();
    let data = sample_counts(
        &schedule,
        Amplitude::from_probability(1.0 / 6.0).unwrap(),
        11,
    );
    let config = MLConfig::default();
    let staged = ml_estimate(&data, &schedule, &config).unwrap();
    let points = 10_000_000;
    let (theta, ll) = exhaustive_argmax(
        &data,
        &schedule,
        points,
        config.prob_clamp,
        Execution::default(),
    )
    .unwrap();
    // the exhaustive maximiser is itself only resolved to its own spacing
    let spacing = (FRAC_PI_2 / (points - 1) as f64).max(staged.final_spacing);
    assert!(
        (staged.theta_hat - theta).abs() <= 2.0 * spacing,
        "staged {} exhaustive {theta}",
        staged.theta_hat
    );
    assert!(staged.log_likelihood_at_max >= ll);
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut r = vec![0.0; values.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn rmse_falls_with_depth() {
    let curve = run_sweep(&SweepConfig {
        a_targets: vec![1.0 / 6.0],
        kind: ScheduleKind::Eis,
        m_values: (2..=8).collect(),
        shots: 100,
        repetitions: 200,
        seed: 4,
        ..SweepConfig::default()
    })
    .unwrap();
    let m: Vec<f64> = curve.rows.iter().map(|r| r.m as f64).collect();
    let rmse: Vec<f64> = curve.rows.iter().map(|r| r.rmse.unwrap()).collect();
    let rho = spearman(&m, &rmse);
    assert!(rho <= -0.9, "rank correlation {rho}, rmse {rmse:?}");
}

#[test]
fn curve_invariants() {
    let curve = run_sweep(&SweepConfig {
        a_targets: vec![1.0 / 48.0, 2.0 / 3.0],
        kind: ScheduleKind::Lis,
        m_values: (0..=6).collect(),
        shots: 20,
        repetitions: 30,
        seed: 9,
        ..SweepConfig::default()
    })
    .unwrap();
    for r in &curve.rows {
        assert!(r.rmse.unwrap() >= r.bias.unwrap().abs());
    }
    for (kind, a) in curve.series_keys() {
        let nq: Vec<u64> = curve.series(&kind, a).map(|r| r.n_queries).collect();
        assert!(nq.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn single_repetition_rerun_is_identical() {
    let config = SweepConfig {
        m_values: (0..=5).collect(),
        repetitions: 1,
        seed: 77,
        ..SweepConfig::default()
    };
    assert_eq!(
        to_csv(&run_sweep(&config).unwrap()),
        to_csv(&run_sweep(&config).unwrap())
    );
}

/// Log-log interpolation of the `(N_q, err)` curve at `x`, if inside it.
fn interp(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let w = curve.windows(2).find(|w| w[0].0 <= x && x <= w[1].0)?;
    let t = (x.ln() - w[0].0.ln()) / (w[1].0.ln() - w[0].0.ln());
    Some((w[0].1.ln() + t * (w[1].1.ln() - w[0].1.ln())).exp())
}

fn percentile_curve(curve: &ErrorCurve, kind: &str, a: f64) -> Vec<(f64, f64)> {
    curve
        .series(kind, a)
        .map(|r| (r.n_queries as f64, r.percentile_error))
        .collect()
}

#[test]
fn appendix_series_ordering() {
    let a = 1.0 / 48.0;
    let curve = run_appendix_comparison(&AppendixConfig {
        eis_shots: vec![30, 100],
        eis_m: (2..=11).collect(),
        classical_m: vec![9, 19, 49, 99, 199, 499, 999],
        repetitions: 400,
        seed: 1,
        ..AppendixConfig::default()
    })
    .unwrap();
    let labels: Vec<String> = curve.series_keys().into_iter().map(|k| k.0).collect();
    assert_eq!(
        labels,
        [
            CONVENTIONAL_LABEL,
            "eis_shots30",
            "eis_shots100",
            "classical"
        ]
    );

    // fewer shots per depth gives the lower percentile error at matched N_q
    let few = percentile_curve(&curve, &eis_label(30), a);
    let many = percentile_curve(&curve, &eis_label(100), a);
    let compared: Vec<bool> = few
        .iter()
        .filter(|p| p.0 >= 1e4)
        .filter_map(|&(nq, e)| interp(&many, nq).map(|m| e <= m))
        .collect();
    assert!(compared.len() >= 3);
    let below = compared.iter().filter(|&&b| b).count();
    assert!(2 * below > compared.len(), "{below}/{}", compared.len());

    let conventional = curve.series(CONVENTIONAL_LABEL, a).next().unwrap();
    assert!((conventional.gamma_fit.unwrap() + 1.0).abs() <= 0.05);
    let classical = curve.series("classical", a).next().unwrap();
    assert!((classical.gamma_fit.unwrap() + 0.5).abs() <= 0.1);
}

/// Mean `|RMSE / CRB - 1|` over EIS depths with `N_q` in `[1e3, 1e5]`.
fn excess_over_bound(a: f64, shots: u64, m_values: impl Iterator<Item = u32>) -> f64 {
    let ml = MLConfig::default();
    let mut excess = Vec::new();
    for m in m_values {
        let bounds =
            BoundReport::new(&make_schedule(ScheduleKind::Eis, m, shots).unwrap(), a).unwrap();
        if !(1e3..=1e5).contains(&(bounds.n_queries as f64)) {
            continue;
        }
        let errors = simulate_errors(
            ScheduleKind::Eis,
            a,
            m,
            shots,
            400,
            1,
            &ml,
            Execution::default(),
        )
        .unwrap();
        let rmse = summarize(&errors, 81.0).unwrap().rmse;
        excess.push((rmse / bounds.crb_error - 1.0).abs());
    }
    excess.iter().sum::<f64>() / excess.len() as f64
}

#[test]
fn deviation_from_bound_shrinks_with_shots() {
    let a = 1.0 / 48.0;
    let hundred = excess_over_bound(a, 100, 2..=9);
    let thousand = excess_over_bound(a, 1000, 0..=5);
    assert!(thousand < hundred, "N=1000 {thousand}, N=100 {hundred}");
}
