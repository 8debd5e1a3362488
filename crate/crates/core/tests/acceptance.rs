//! Acceptance suite for the library: every test prints one pass line and
//! pins the tolerances the crate is expected to hold. The CLI-level
//! counterpart lives in the `eulerpose-cli` crate's acceptance target.

use std::time::Instant;

use eulerpose::dataset::{
    generate_synthetic, parse_cambridge_line, parse_sevenscenes_pose, read_interchange,
    write_interchange,
};
use eulerpose::loss::{euler_loss, euler_loss_grad, LossConfig};
use eulerpose::metrics::{angle_error, mean, median, summarize, ErrorRecord};
use eulerpose::rng::SplitMix64;
use eulerpose::rotation::{
    euler_to_quat, quat_multiply, quat_to_euler, quat_to_matrix, EulerAngles, Quaternion,
};
use eulerpose::Pose;
use std::f64::consts::{FRAC_PI_2, PI};

fn random_unit_quat(rng: &mut SplitMix64) -> Quaternion {
    Quaternion::from_unnormalized(
        rng.gaussian(),
        rng.gaussian(),
        rng.gaussian(),
        rng.gaussian(),
    )
    .expect("gaussian 4-vector is nonzero")
}

fn sign_insensitive_deviation(a: &Quaternion, b: &Quaternion) -> f64 {
    let a = a.to_array();
    let b = b.to_array();
    let same = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let flip = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x + y).abs())
        .fold(0.0f64, f64::max);
    same.min(flip)
}

#[test]
fn rotation_round_trips_hold_at_1e9() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(1001);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 1000 {
        let q = random_unit_quat(&mut rng);
        let e = quat_to_euler(&q);
        if e.pitch().abs() >= FRAC_PI_2 - 0.01 {
            continue;
        }
        worst = worst.max(sign_insensitive_deviation(&q, &euler_to_quat(&e)));
        checked += 1;
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-9, "worst deviation {worst}");
    assert!(elapsed.as_secs_f64() < 1.0, "round trips took {elapsed:?}");
    println!(
        "[acceptance] PASS rotation round trips: 1000 quaternions within 1e-9 \
         (worst {worst:.3e}) in {elapsed:?}"
    );
}

#[test]
fn angle_metric_identities_and_invariance() {
    let mut rng = SplitMix64::new(1002);
    let mut worst_identity = 0.0f64;
    let mut worst_offset = 0.0f64;
    let mut worst_invariance = 0.0f64;
    for _ in 0..100 {
        let q = random_unit_quat(&mut rng);
        worst_identity = worst_identity.max(angle_error(&q, &q));
        let neg = Quaternion::new(-q.w(), -q.x(), -q.y(), -q.z()).unwrap();
        worst_identity = worst_identity.max(angle_error(&q, &neg));

        let axis = [rng.gaussian(), rng.gaussian(), rng.gaussian()];
        let offset = Quaternion::from_axis_angle(axis, 10f64.to_radians()).unwrap();
        worst_offset =
            worst_offset.max((angle_error(&q, &quat_multiply(&q, &offset)) - 10.0).abs());

        let q_hat = random_unit_quat(&mut rng);
        let r = random_unit_quat(&mut rng);
        let base = angle_error(&q, &q_hat);
        let rotated = angle_error(&quat_multiply(&r, &q), &quat_multiply(&r, &q_hat));
        worst_invariance = worst_invariance.max((rotated - base).abs());
    }
    assert!(
        worst_identity <= 1e-9,
        "identity/antipode deviation {worst_identity}"
    );
    assert!(
        worst_offset <= 1e-9,
        "10-degree offset deviation {worst_offset}"
    );
    assert!(
        worst_invariance <= 1e-9,
        "left-invariance deviation {worst_invariance}"
    );
    println!(
        "[acceptance] PASS angle metric: zero at identity and antipode, 10-degree offset \
         within 1e-9 ({worst_offset:.3e}), left-invariant under 100 rotations ({worst_invariance:.3e})"
    );
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let mut rng = SplitMix64::new(1003);
    let cfg = LossConfig::default();
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
    let step = 1e-6;
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let pred = draw_pose(&mut rng);
        let label = draw_pose(&mut rng);
        let t_res: f64 = pred
            .translation()
            .iter()
            .zip(label.translation())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let o_res: f64 = pred
            .orientation()
            .to_array()
            .iter()
            .zip(label.orientation().to_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
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
        let eval = |t: [f64; 3], e: [f64; 3]| {
            let p = Pose::new(t, EulerAngles::new(e[0], e[1], e[2]).unwrap()).unwrap();
            euler_loss(&p, &label, &cfg)
        };
        let t0 = pred.translation();
        let e0 = pred.orientation().to_array();
        let mut numeric = [0.0f64; 6];
        for (i, slot) in numeric.iter_mut().enumerate() {
            *slot = if i < 3 {
                let (mut tp, mut tm) = (t0, t0);
                tp[i] += step;
                tm[i] -= step;
                (eval(tp, e0) - eval(tm, e0)) / (2.0 * step)
            } else {
                // Perturb the angle by `step` expressed in the loss unit.
                let rad_step = step / cfg.angle_unit.per_radian();
                let (mut ep, mut em) = (e0, e0);
                ep[i - 3] += rad_step;
                em[i - 3] -= rad_step;
                (eval(t0, ep) - eval(t0, em)) / (2.0 * step)
            };
        }
        // Relative error at the vector level: componentwise ratios blow up
        // on components that happen to sit near zero.
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
    assert!(worst <= 1e-5, "worst relative error {worst}");
    println!(
        "[acceptance] PASS loss gradient: analytic matches central differences (step 1e-6) \
         on 100 pose pairs within 1e-5 (worst {worst:.3e})"
    );
}

#[test]
fn unit_weights_realize_one_meter_one_degree() {
    let cfg = LossConfig::default();
    assert_eq!((cfg.w1, cfg.w2), (1.0, 1.0));
    let label = Pose::identity();
    let one_meter = Pose::new([1.0, 0.0, 0.0], EulerAngles::zero()).unwrap();
    let meter_loss = euler_loss(&one_meter, &label, &cfg);
    assert!(
        (meter_loss - 1.0).abs() <= 1e-12,
        "1 m residual -> {meter_loss}"
    );
    let one_degree = Pose::new(
        [0.0; 3],
        EulerAngles::new(1f64.to_radians(), 0.0, 0.0).unwrap(),
    )
    .unwrap();
    let degree_loss = euler_loss(&one_degree, &label, &cfg);
    assert!(
        (degree_loss - 1.0).abs() <= 1e-12,
        "1 degree residual -> {degree_loss}"
    );
    println!(
        "[acceptance] PASS weight semantics: unit weights score a 1 m residual as \
         {meter_loss} and a 1-degree residual as {degree_loss} (within 1e-12 of 1.0)"
    );
}

#[test]
fn median_and_mean_match_sort_oracle() {
    let median_by_sort = |values: &[f64]| {
        let mut xs = values.to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        if n % 2 == 1 {
            xs[n / 2]
        } else {
            (xs[n / 2 - 1] + xs[n / 2]) / 2.0
        }
    };
    let mut rng = SplitMix64::new(1005);
    let mut odd = 0;
    let mut even = 0;
    for _ in 0..1000 {
        let len = 1 + (rng.next_u64() % 50) as usize;
        if len.is_multiple_of(2) {
            even += 1;
        } else {
            odd += 1;
        }
        let xs: Vec<f64> = (0..len).map(|_| rng.uniform(-1000.0, 1000.0)).collect();
        assert_eq!(
            median(&xs).unwrap(),
            median_by_sort(&xs),
            "median mismatch on {xs:?}"
        );
    }
    assert!(odd > 0 && even > 0);

    // Heavy right tail: many small errors, a few large ones.
    let mut skewed = vec![0.05; 40];
    skewed.extend([2.0, 5.0, 9.0]);
    let m = median(&skewed).unwrap();
    let a = mean(&skewed).unwrap();
    assert!(a > m, "mean {a} should exceed median {m} on a skewed list");
    println!(
        "[acceptance] PASS median/mean: exact sort-oracle agreement on 1000 lists \
         ({odd} odd, {even} even); skewed list gives mean {a:.3} > median {m:.3}"
    );
}

#[test]
fn pose_file_fixtures_parse_exactly() {
    // Identity and pi-about-z seven-scenes fixtures are exact.
    let identity = "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";
    let pose = parse_sevenscenes_pose(identity).unwrap();
    assert_eq!(pose.translation(), [0.0, 0.0, 0.0]);
    assert_eq!(pose.orientation().to_array(), [0.0, 0.0, 0.0]);

    let half_turn = "-1 0 0 1\n0 -1 0 2\n0 0 1 3\n0 0 0 1\n";
    let pose = parse_sevenscenes_pose(half_turn).unwrap();
    assert_eq!(pose.translation(), [1.0, 2.0, 3.0]);
    // The stored pose is exact: yaw pi, pitch 0, roll 0. The quaternion
    // view re-derives w = cos(pi/2), which costs one rounding of pi/2.
    assert_eq!(pose.orientation().to_array(), [PI, 0.0, 0.0]);
    let q = pose.orientation_quat();
    assert!(sign_insensitive_deviation(&q, &Quaternion::new(0.0, 0.0, 0.0, 1.0).unwrap()) <= 1e-15);

    // Random rotations survive the matrix -> text -> pose path within 1e-9
    // of the quaternion that built the fixture.
    let mut rng = SplitMix64::new(1007);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_unit_quat(&mut rng).canonicalized();
        let rows = *quat_to_matrix(&q).rows();
        let mut text = String::new();
        for (i, row) in rows.iter().enumerate() {
            text.push_str(&format!(
                "{} {} {} {}\n",
                row[0],
                row[1],
                row[2],
                i as f64 * 0.5
            ));
        }
        text.push_str("0 0 0 1\n");
        let parsed = parse_sevenscenes_pose(&text).unwrap();
        worst = worst.max(sign_insensitive_deviation(&q, &parsed.orientation_quat()));
    }
    assert!(worst <= 1e-9, "seven-scenes fixture deviation {worst}");

    // Cambridge fixtures.
    let rec = parse_cambridge_line("seq1/frame00001.png 0 0 0 1 0 0 0", 4).unwrap();
    assert_eq!(rec.pose.translation(), [0.0, 0.0, 0.0]);
    assert_eq!(rec.pose.orientation().to_array(), [0.0, 0.0, 0.0]);
    let rec = parse_cambridge_line("seq1/frame00002.png 1 2 3 0 0 0 1", 5).unwrap();
    assert!((rec.pose.orientation().yaw() - PI).abs() <= 1e-15);

    // Interchange write-then-read is the identity.
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic(1009, 32, 10, 0.3).unwrap();
    let path = dir.path().join("roundtrip.tsv");
    write_interchange(&ds, &path).unwrap();
    let back = read_interchange(&path).unwrap();
    assert_eq!(ds, back);
    println!(
        "[acceptance] PASS format fidelity: fixture poses exact, random fixtures within 1e-9 \
         (worst {worst:.3e}), interchange write-read is the identity on {} frames",
        ds.len()
    );
}

#[test]
fn summaries_aggregate_both_error_columns() {
    // summarize() is the backing for report rows; pin its column wiring.
    let records: Vec<ErrorRecord> = [(0.1, 2.0), (0.3, 6.0), (0.2, 4.0)]
        .iter()
        .enumerate()
        .map(|(i, &(t, a))| ErrorRecord {
            frame_id: format!("f{i}"),
            translation_error_m: t,
            angle_error_deg: a,
        })
        .collect();
    let s = summarize(&records, "scene").unwrap();
    assert_eq!(s.median_translation_m, 0.2);
    assert_eq!(s.median_angle_deg, 4.0);
    assert!((s.mean_translation_m - 0.2).abs() < 1e-15);
    assert!((s.mean_angle_deg - 4.0).abs() < 1e-15);
    println!("[acceptance] PASS summary aggregation: median/mean applied to both error columns");
}
