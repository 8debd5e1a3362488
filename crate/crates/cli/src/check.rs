//! Built-in self checks: round trips, gradient checks, and metric
//! invariants, runnable from the command line on any machine.

use eulerpose::loss::{euler_loss, euler_loss_grad, LossConfig};
use eulerpose::metrics::{angle_error, mean, median};
use eulerpose::rng::SplitMix64;
use eulerpose::rotation::{
    euler_to_quat, matrix_to_quat, quat_multiply, quat_to_euler, quat_to_matrix, wrap_angle,
    EulerAngles, Quaternion,
};
use eulerpose::Pose;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn from_deviation(name: &'static str, deviation: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: deviation <= tolerance,
            detail: format!("max deviation {deviation:.3e} (tolerance {tolerance:.1e})"),
        }
    }
}

/// Run every self check; each entry is independent of the others.
pub fn run_checks() -> Vec<CheckResult> {
    vec![
        check_wrapping(),
        check_quat_euler_round_trip(),
        check_matrix_round_trip(),
        check_angle_metric(),
        check_loss_gradient(),
        check_median_mean(),
    ]
}

fn random_unit_quat(rng: &mut SplitMix64) -> Quaternion {
    Quaternion::from_unnormalized(
        rng.gaussian(),
        rng.gaussian(),
        rng.gaussian(),
        rng.gaussian(),
    )
    .expect("gaussian 4-vector is nonzero")
}

fn check_wrapping() -> CheckResult {
    let mut worst = 0.0f64;
    for i in 0..500 {
        let a = -8.0 + 0.032 * i as f64;
        let w = wrap_angle(a).unwrap();
        if w <= -std::f64::consts::PI || w > std::f64::consts::PI {
            worst = worst.max(1.0);
        }
        worst = worst.max((wrap_angle(w).unwrap() - w).abs());
        for k in -3i64..=3 {
            let shifted = wrap_angle(a + k as f64 * std::f64::consts::TAU).unwrap();
            worst = worst.max((shifted - w).abs());
        }
    }
    CheckResult::from_deviation(
        "angle wrapping (range, idempotence, periodicity)",
        worst,
        1e-9,
    )
}

fn check_quat_euler_round_trip() -> CheckResult {
    let mut rng = SplitMix64::new(0xC0FFEE);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 1000 {
        let q = random_unit_quat(&mut rng);
        let e = quat_to_euler(&q);
        if e.pitch().abs() >= std::f64::consts::FRAC_PI_2 - 0.01 {
            continue;
        }
        let back = euler_to_quat(&e).to_array();
        let q = q.to_array();
        let same = back
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let flip = back
            .iter()
            .zip(&q)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(same.min(flip));
        checked += 1;
    }
    CheckResult::from_deviation("quaternion-euler round trips (1000 samples)", worst, 1e-9)
}

fn check_matrix_round_trip() -> CheckResult {
    let mut rng = SplitMix64::new(0xBEEF);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = random_unit_quat(&mut rng).canonicalized();
        let back = matrix_to_quat(&quat_to_matrix(&q)).to_array();
        let q = q.to_array();
        let same = back
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let flip = back
            .iter()
            .zip(&q)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(same.min(flip));
    }
    CheckResult::from_deviation("matrix-quaternion round trips (1000 samples)", worst, 1e-9)
}

fn check_angle_metric() -> CheckResult {
    let mut rng = SplitMix64::new(0xA11CE);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_unit_quat(&mut rng);
        worst = worst.max(angle_error(&q, &q));
        let neg = Quaternion::new(-q.w(), -q.x(), -q.y(), -q.z()).unwrap();
        worst = worst.max(angle_error(&q, &neg));

        let axis = [rng.gaussian(), rng.gaussian(), rng.gaussian()];
        let offset = Quaternion::from_axis_angle(axis, 10f64.to_radians()).unwrap();
        worst = worst.max((angle_error(&q, &quat_multiply(&q, &offset)) - 10.0).abs());

        let q_hat = random_unit_quat(&mut rng);
        let r = random_unit_quat(&mut rng);
        let base = angle_error(&q, &q_hat);
        let rotated = angle_error(&quat_multiply(&r, &q), &quat_multiply(&r, &q_hat));
        worst = worst.max((rotated - base).abs());
    }
    CheckResult::from_deviation(
        "angle-error metric (identity, antipode, 10 deg, invariance)",
        worst,
        1e-9,
    )
}

fn check_loss_gradient() -> CheckResult {
    let mut rng = SplitMix64::new(0x50DA);
    let cfg = LossConfig::default();
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let draw_pose = |rng: &mut SplitMix64| {
            Pose::new(
                [
                    rng.uniform(-5.0, 5.0),
                    rng.uniform(-5.0, 5.0),
                    rng.uniform(-5.0, 5.0),
                ],
                EulerAngles::new(
                    rng.uniform(-2.5, 2.5),
                    rng.uniform(-1.4, 1.4),
                    rng.uniform(-2.5, 2.5),
                )
                .unwrap(),
            )
            .unwrap()
        };
        let pred = draw_pose(&mut rng);
        let label = draw_pose(&mut rng);
        // Both residual norms must be away from the kink, where central
        // differences pick up curvature error.
        let norm = |a: [f64; 3], b: [f64; 3]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        let t_res = norm(pred.translation(), label.translation());
        let o_res = norm(
            pred.orientation().to_array(),
            label.orientation().to_array(),
        );
        if t_res <= 1e-3 || o_res <= 1e-3 {
            continue;
        }
        let g = euler_loss_grad(&pred, &label, &cfg);
        let analytic = [
            g.d_translation[0],
            g.d_translation[1],
            g.d_translation[2],
            g.d_orientation[0],
            g.d_orientation[1],
            g.d_orientation[2],
        ];
        let step = 1e-6;
        let t0 = pred.translation();
        let e0 = pred.orientation().to_array();
        let eval = |t: [f64; 3], e: [f64; 3]| {
            let p = Pose::new(t, EulerAngles::new(e[0], e[1], e[2]).unwrap()).unwrap();
            euler_loss(&p, &label, &cfg)
        };
        let mut numeric = [0.0f64; 6];
        for (i, slot) in numeric.iter_mut().enumerate() {
            *slot = if i < 3 {
                let (mut tp, mut tm) = (t0, t0);
                tp[i] += step;
                tm[i] -= step;
                (eval(tp, e0) - eval(tm, e0)) / (2.0 * step)
            } else {
                let rad_step = step / cfg.angle_unit.per_radian();
                let (mut ep, mut em) = (e0, e0);
                ep[i - 3] += rad_step;
                em[i - 3] -= rad_step;
                (eval(t0, ep) - eval(t0, em)) / (2.0 * step)
            };
        }
        // Vector-level relative error; componentwise ratios are noise
        // whenever a single component sits near zero.
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n) * (a - n))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
        checked += 1;
    }
    CheckResult::from_deviation(
        "loss gradient vs central finite differences (100 pairs)",
        worst,
        1e-5,
    )
}

fn check_median_mean() -> CheckResult {
    let mut rng = SplitMix64::new(0x5EED);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let len = 1 + (rng.next_u64() % 30) as usize;
        let xs: Vec<f64> = (0..len).map(|_| rng.uniform(-50.0, 50.0)).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let oracle = if len % 2 == 1 {
            sorted[len / 2]
        } else {
            (sorted[len / 2 - 1] + sorted[len / 2]) / 2.0
        };
        worst = worst.max((median(&xs).unwrap() - oracle).abs());
        let mean_oracle = sorted.iter().sum::<f64>() / len as f64;
        worst = worst.max((mean(&xs).unwrap() - mean_oracle).abs());
    }
    CheckResult::from_deviation("median/mean vs sort-based oracle (200 lists)", worst, 1e-12)
}
