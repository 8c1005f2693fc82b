//! Solver invariants on random pixels and rendered stacks.

use proptest::prelude::*;

use photostereo::geometry::UnitVector3;
use photostereo::panel::{light_direction, uniform_ring};
use photostereo::render::{render_stack, RenderSettings, SphereScene};
use photostereo::solver::{
    solve_pixel, solve_pixel_direct, solve_stack, subtract_ambient, ImageStack, Thresholds,
};
use photostereo::Execution;

fn direction() -> impl Strategy<Value = UnitVector3> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.3..1.0f64)
        .prop_map(|(x, y, z)| UnitVector3::from_components(x, y, z).unwrap())
}

fn dot(a: &UnitVector3, b: &UnitVector3) -> f64 {
    a.x() * b.x() + a.y() * b.y() + a.z() * b.z()
}

/// 3×3 determinant of the light rows, the oracle for conditioning.
fn det3(l: &[UnitVector3]) -> f64 {
    let (a, b, c) = (l[0].to_array(), l[1].to_array(), l[2].to_array());
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

proptest! {
    #[test]
    fn recovers_normal_and_albedo(
        n in direction(),
        albedo in 0.05..1.0f64,
        lights in prop::collection::vec(direction(), 3..8),
    ) {
        prop_assume!(det3(&lights).abs() > 0.05);
        let i0 = 200.0;
        let intens: Vec<f64> = lights.iter().map(|l| i0 * albedo * dot(&n, l)).collect();
        let sol = solve_pixel(&intens, &lights, i0).unwrap();
        prop_assert!(sol.normal.angle_to(&n).to_degrees() < 1e-6);
        prop_assert!((sol.albedo - albedo).abs() / albedo < 1e-9);
    }

    #[test]
    fn three_light_paths_agree(
        n in direction(),
        albedo in 0.05..1.0f64,
        a in direction(), b in direction(), c in direction(),
    ) {
        let lights = [a, b, c];
        prop_assume!(det3(&lights).abs() > 0.05);
        let intens: [f64; 3] = std::array::from_fn(|k| 255.0 * albedo * dot(&n, &lights[k]));
        let ls = solve_pixel(&intens, &lights, 255.0).unwrap();
        let direct = solve_pixel_direct(&intens, &lights, 255.0).unwrap();
        for (x, y) in ls.normal.to_array().iter().zip(direct.normal.to_array()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((ls.albedo - direct.albedo).abs() <= 1e-12 * direct.albedo.max(1.0));
    }

    #[test]
    fn permutation_invariant_per_pixel(
        intens in prop::collection::vec(1.0..250.0f64, 6),
        seed in any::<u64>(),
    ) {
        let lights = uniform_ring(35.0, 6);
        let base = solve_pixel(&intens, &lights, 255.0).unwrap();
        let mut order: Vec<usize> = (0..6).collect();
        let mut s = seed;
        for k in (1..6).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(k, (s >> 33) as usize % (k + 1));
        }
        let pi: Vec<f64> = order.iter().map(|&k| intens[k]).collect();
        let pl: Vec<UnitVector3> = order.iter().map(|&k| lights[k]).collect();
        prop_assert_eq!(solve_pixel(&pi, &pl, 255.0).unwrap(), base);
    }

    #[test]
    fn scale_invariant_per_pixel(
        intens in prop::collection::vec(1.0..250.0f64, 4),
        c in 0.01..10.0f64,
    ) {
        let lights = uniform_ring(25.0, 4);
        let base = solve_pixel(&intens, &lights, 255.0).unwrap();
        let scaled: Vec<f64> = intens.iter().map(|v| v * c).collect();
        let s = solve_pixel(&scaled, &lights, 255.0).unwrap();
        for (x, y) in base.normal.to_array().iter().zip(s.normal.to_array()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((s.albedo - c * base.albedo).abs() <= 1e-12 * c * base.albedo);
    }
}

#[test]
fn stack_recovery_at_several_angles() {
    let scene = SphereScene::with_size(48);
    let real = RenderSettings {
        quantize: false,
        ..RenderSettings::default()
    };
    for g in [10.0, 30.0, 55.0, 80.0] {
        let stack = render_stack(
            &scene,
            &real,
            &uniform_ring(g, 6),
            false,
            Execution::default(),
        )
        .unwrap();
        let map = solve_stack(&stack, &Thresholds::default());
        let truth = scene.ground_truth();
        assert!(map.valid_count() > 0);
        for i in 0..map.len() {
            if let Some(n) = map.normal(i) {
                let t = truth.normal(i).expect("solved pixels lie on the sphere");
                assert!(n.angle_to(t).to_degrees() < 1e-6, "g = {g}, pixel {i}");
                assert!((map.albedo()[i] - scene.albedo).abs() < 1e-9 * scene.albedo);
            }
        }
    }
}

#[test]
fn ambient_subtraction_matches_clean_stack() {
    let scene = SphereScene::with_size(40);
    let lights = uniform_ring(30.0, 5);
    let real = RenderSettings {
        quantize: false,
        ..RenderSettings::default()
    };
    let clean = render_stack(&scene, &real, &lights, false, Execution::default()).unwrap();
    for level in [3.0, 25.0, 40.0] {
        let lit = RenderSettings {
            ambient_level: level,
            ..real.clone()
        };
        let stack = render_stack(&scene, &lit, &lights, true, Execution::default()).unwrap();
        let a = solve_stack(&subtract_ambient(&stack).unwrap(), &Thresholds::default());
        let b = solve_stack(&clean, &Thresholds::default());
        assert_eq!(a.valid_mask(), b.valid_mask());
        for i in 0..a.len() {
            if let (Some(x), Some(y)) = (a.normal(i), b.normal(i)) {
                assert!((x.as_vector() - y.as_vector()).amax() <= 1e-12);
            }
        }
    }
}

#[test]
fn grazing_stack_is_rejected_per_pixel() {
    let scene = SphereScene::with_size(24);
    let lights = vec![light_direction(1.0); 3];
    let real = RenderSettings {
        quantize: false,
        ..RenderSettings::default()
    };
    let images: Vec<_> = render_stack(&scene, &real, &lights, false, Execution::Sequential)
        .unwrap()
        .images;
    let stack = ImageStack::new(images, lights, 255.0, None).unwrap();
    assert_eq!(solve_stack(&stack, &Thresholds::default()).valid_count(), 0);
}
