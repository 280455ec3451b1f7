mod common;

use common::{dist, grid_nearest, polygon_nearest, rng, uniform_vec};
use fpqsm::inner_projection::{dykstra_project, dykstra_project_with, exact_project_special, ConvexRegion, DykstraOptions};
use fpqsm::operators::{project_halfspace, BoxSet, HalfSpace, Sense};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// Unit box cut by one to three half-spaces that all keep a random interior
/// point at least 0.05 inside.
fn random_region(r: &mut ChaCha20Rng) -> ConvexRegion {
    let center = uniform_vec(r, 2, 0.2, 0.8);
    let k = r.random_range(1..=3);
    let hs = (0..k)
        .map(|_| {
            let angle = std::f64::consts::TAU * r.random::<f64>();
            let b = vec![angle.cos(), angle.sin()];
            let margin = 0.05 + 0.4 * r.random::<f64>();
            let at = b[0] * center[0] + b[1] * center[1];
            if r.random::<bool>() {
                HalfSpace::upper(b, at + margin).unwrap()
            } else {
                let b: Vec<f64> = b.iter().map(|v| -v).collect();
                HalfSpace::lower(b, -at - margin).unwrap()
            }
        })
        .collect();
    ConvexRegion::new(hs, Some(BoxSet::uniform(2, 0.0, 1.0).unwrap())).unwrap()
}

fn member(region: &ConvexRegion) -> impl Fn(f64, f64) -> bool + '_ {
    move |x, y| {
        let p = [x, y];
        (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) && region.halfspaces().iter().all(|h| h.contains(&p))
    }
}

/// The region as `⟨a, x⟩ ≤ p` rows, unit box included.
fn rows(region: &ConvexRegion) -> Vec<([f64; 2], f64)> {
    let mut out: Vec<([f64; 2], f64)> = vec![([1.0, 0.0], 1.0), ([-1.0, 0.0], 0.0), ([0.0, 1.0], 1.0), ([0.0, -1.0], 0.0)];
    for h in region.halfspaces() {
        let b = h.normal();
        match h.sense() {
            Sense::Upper => out.push(([b[0], b[1]], h.threshold())),
            Sense::Lower => out.push(([-b[0], -b[1]], -h.threshold())),
        }
    }
    out
}

#[test]
fn dykstra_matches_brute_force_on_random_planar_regions() {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let region = random_region(&mut r);
        let z = uniform_vec(&mut r, 2, -1.0, 2.0);
        let rep = dykstra_project(&region, &z, 1e-11, 1_000_000).unwrap();
        assert!(rep.converged, "region {i}: {rep:?}");

        let exact = polygon_nearest(&rows(&region), [z[0], z[1]]).expect("nonempty region");
        // the 1e-3 grid can only be slightly worse than the enumerated optimum
        let grid = grid_nearest(member(&region), [z[0], z[1]], 0.0, 1.0, 1e-3, 0).unwrap();
        let (de, dg) = (dist(&exact, &z), dist(&grid, &z));
        assert!(de <= dg + 1e-12 && dg <= de + 2e-3, "region {i}: enumeration {de} vs grid {dg}");

        let gap = dist(&rep.point, &exact);
        worst = worst.max(gap);
        assert!(gap <= 1e-5, "region {i}: z {z:?} dykstra {rep:?} vs brute force {exact:?} {:?}", rows(&region));
        if let Some(closed) = exact_project_special(&region, &z) {
            assert!(dist(&closed, &exact) <= 1e-6, "region {i}: closed form {closed:?} vs {exact:?}");
        }
    }
    eprintln!("worst dykstra gap {worst:e}");
}

#[test]
fn corner_example_against_grid() {
    let region = ConvexRegion::new(
        vec![HalfSpace::lower(vec![1.0, 0.0], 1.0).unwrap(), HalfSpace::lower(vec![0.0, 1.0], 1.0).unwrap()],
        None,
    )
    .unwrap();
    let rep = dykstra_project(&region, &[0.0, 0.0], 1e-10, 100_000).unwrap();
    let oracle = grid_nearest(|x, y| x >= 1.0 && y >= 1.0, [0.0, 0.0], -1.0, 3.0, 1e-3, 4).unwrap();
    assert!(dist(&rep.point, &oracle) < 1e-6);
    assert!(dist(&rep.point, &[1.0, 1.0]) < 1e-9);
}

#[test]
fn single_halfspace_is_exact() {
    let mut r = rng(9);
    for _ in 0..100 {
        let n = r.random_range(1..6);
        let b = uniform_vec(&mut r, n, -2.0, 2.0);
        let h = if r.random::<bool>() {
            HalfSpace::upper(b, r.random::<f64>()).unwrap()
        } else {
            HalfSpace::lower(b, r.random::<f64>()).unwrap()
        };
        let region = ConvexRegion::new(vec![h.clone()], None).unwrap();
        let z = uniform_vec(&mut r, n, -5.0, 5.0);
        let rep = dykstra_project(&region, &z, 1e-10, 1000).unwrap();
        let exact = project_halfspace(&h, &z).unwrap();
        assert!(dist(&rep.point, &exact) <= 1e-9);
        assert_eq!(exact_project_special(&region, &z).unwrap(), exact);
    }
}

#[test]
fn box_only_and_box_cut_closed_forms() {
    let region = ConvexRegion::new(vec![], Some(BoxSet::uniform(2, 0.0, 1.0).unwrap())).unwrap();
    assert_eq!(exact_project_special(&region, &[3.0, 0.5]).unwrap().coords(), &[1.0, 0.5]);

    let h = HalfSpace::upper(vec![1.0, 1.0], 1.0).unwrap();
    let cut = ConvexRegion::new(vec![h], Some(BoxSet::uniform(2, 0.0, 1.0).unwrap())).unwrap();
    for z in [[2.0, 2.0], [1.5, -0.5], [-1.0, 3.0]] {
        let exact = exact_project_special(&cut, &z).unwrap();
        let oracle = grid_nearest(|x, y| (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) && x + y <= 1.0, z, 0.0, 1.0, 1e-3, 4).unwrap();
        assert!(dist(&exact, &oracle) <= 1e-6, "{z:?}: {exact:?} vs {oracle:?}");
    }
    let three = ConvexRegion::new(vec![HalfSpace::upper(vec![1.0, 0.0, 0.0], 1.0).unwrap()], Some(BoxSet::uniform(3, 0.0, 2.0).unwrap())).unwrap();
    assert!(exact_project_special(&three, &[5.0, 5.0, 5.0]).is_none());
}

#[test]
fn feasible_input_is_returned_untouched() {
    let mut r = rng(4);
    let region = random_region(&mut r);
    let inside = [region.halfspaces()[0].normal()[0].abs() * 0.0 + 0.5, 0.5];
    if region.max_violation(&inside) == 0.0 {
        let rep = dykstra_project(&region, &inside, 1e-8, 10).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.point.coords(), &inside);
    }
}

#[test]
fn reports_are_deterministic() {
    let mut r = rng(77);
    for _ in 0..20 {
        let region = random_region(&mut r);
        let z = uniform_vec(&mut r, 2, -1.0, 2.0);
        let a = dykstra_project(&region, &z, 1e-9, 100_000).unwrap();
        let b = dykstra_project(&region, &z, 1e-9, 100_000).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn sweep_cap_reports_achieved_tolerance() {
    let region = ConvexRegion::new(
        vec![HalfSpace::lower(vec![1.0, 0.5], 1.0).unwrap(), HalfSpace::lower(vec![0.5, 1.0], 1.0).unwrap()],
        None,
    )
    .unwrap();
    let z = [-3.0, -2.0];
    let rep = dykstra_project(&region, &z, 1e-14, 2).unwrap();
    assert_eq!(rep.iterations, 2);
    assert!(!rep.converged);
    assert!(rep.achieved_tol > 1e-14);
}

#[test]
fn empty_region_is_flagged() {
    let region = ConvexRegion::new(
        vec![HalfSpace::upper(vec![1.0, 0.0], -1.0).unwrap()],
        Some(BoxSet::uniform(2, 0.0, 1.0).unwrap()),
    )
    .unwrap();
    let rep = dykstra_project(&region, &[0.5, 0.5], 1e-6, 50_000).unwrap();
    assert!(rep.infeasible);
    assert!(!rep.converged);
}

/// Per-sweep violation history on feasible regions. Dykstra's method does
/// not guarantee a monotone violation sequence; this records how often the
/// sequence increases rather than asserting it never does.
#[test]
fn violation_history_on_feasible_regions() {
    let mut r = rng(31);
    let mut increases = 0usize;
    let mut sweeps = 0usize;
    for _ in 0..100 {
        let region = random_region(&mut r);
        let z = uniform_vec(&mut r, 2, -1.0, 2.0);
        let opts = DykstraOptions {
            record_violations: true,
            ..DykstraOptions::new(1e-10, 100_000)
        };
        let rep = dykstra_project_with(&region, &z, &opts).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.violation_history.len(), rep.iterations);
        assert_eq!(rep.violation_history.last().copied().unwrap_or(rep.max_violation), rep.max_violation);
        sweeps += rep.violation_history.len();
        increases += rep.violation_history.windows(2).filter(|w| w[1] > w[0] + 1e-15).count();
    }
    eprintln!("violation increased in {increases} of {sweeps} sweeps");
}
