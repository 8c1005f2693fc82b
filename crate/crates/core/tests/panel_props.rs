use proptest::prelude::*;

use photostereo::panel::{operating_distance, solve_configuration, HardwareCatalogue};

fn brute_force_best_residual(target: f64, hw: &HardwareCatalogue) -> f64 {
    let mut best = f64::INFINITY;
    for &g in &hw.joint_angles {
        let t = g.to_radians();
        for &s1 in &hw.spacer_lengths {
            for &s2 in &hw.spacer_lengths {
                let d1 = hw.disc_radius + s1 + hw.joint_radius;
                let d2 = hw.joint_radius + s2 + hw.blob_offset;
                best = best.min(((d1 * t.cos() + d2) / t.sin() - target).abs());
            }
        }
    }
    best
}

fn catalogue() -> impl Strategy<Value = HardwareCatalogue> {
    (
        0.01..0.1f64,
        0.002..0.02f64,
        0.005..0.05f64,
        prop::collection::vec(0.0..0.2f64, 1..6),
        prop::sample::subsequence(vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0], 1..=8),
    )
        .prop_map(|(disc, joint, blob, spacers, angles)| HardwareCatalogue {
            disc_radius: disc,
            joint_radius: joint,
            blob_offset: blob,
            spacer_lengths: spacers,
            joint_angles: angles,
            wing_count: 6,
        })
}

proptest! {
    #[test]
    fn never_worse_than_any_catalogue_member(target in 0.05..2.0f64, hw in catalogue()) {
        let sol = solve_configuration(target, &hw).unwrap();
        let best = brute_force_best_residual(target, &hw);
        prop_assert!(sol.residual <= best + 1e-12);
        let d = operating_distance(&sol.config).unwrap();
        prop_assert!((d - sol.operating_distance).abs() <= 1e-12);
        prop_assert!(((d - target).abs() - sol.residual).abs() <= 1e-12);
        prop_assert!(hw.spacer_lengths.contains(&sol.config.spacer1));
        prop_assert!(hw.spacer_lengths.contains(&sol.config.spacer2));
        prop_assert!(hw.joint_angles.contains(&sol.config.phase_angle_g));
    }
}

#[test]
fn default_catalogue_at_bench_distance() {
    let hw = HardwareCatalogue::default();
    let sol = solve_configuration(0.35, &hw).unwrap();
    assert!((sol.residual - brute_force_best_residual(0.35, &hw)).abs() <= 1e-12);
    assert!(sol.config.validate().is_ok());
}
