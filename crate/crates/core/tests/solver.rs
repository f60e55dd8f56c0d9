use mongeo::hellinger::hellinger_path;
use mongeo::solver::{el_residual, solve_geodesic, ElReading, SolverOptions};
use mongeo::{MonotoneMap, SpaceGrid};

fn smooth_pair(n: usize) -> (MonotoneMap, MonotoneMap) {
    let sg = SpaceGrid::new(n).unwrap();
    (MonotoneMap::identity(sg), MonotoneMap::from_fn(sg, |x| 0.5 * (x + x * x)).unwrap())
}

#[test]
fn el_residual_shrinks_under_refinement() {
    let mut residuals = vec![];
    for (n, m) in [(32, 16), (64, 32)] {
        let (a, b) = smooth_pair(n);
        let r = solve_geodesic(&a, &b, &SolverOptions::with_steps(m)).unwrap();
        assert!(r.converged);
        residuals.push(el_residual(&r.path, ElReading::Derived).unwrap());
    }
    assert!(residuals[1] * 2.0 <= residuals[0], "{residuals:?}");
}

#[test]
fn hellinger_path_is_further_from_stationary() {
    let (a, b) = smooth_pair(64);
    let geo = solve_geodesic(&a, &b, &SolverOptions::with_steps(32)).unwrap();
    let hel = hellinger_path(&a, &b, 32).unwrap();
    let r_geo = el_residual(&geo.path, ElReading::Derived).unwrap();
    let r_hel = el_residual(&hel.path, ElReading::Derived).unwrap();
    assert!(r_hel > r_geo, "{r_hel} vs {r_geo}");
    assert!(geo.energy.total <= hel.energy.total);
}

#[test]
fn distance_is_grid_consistent() {
    let sq = |n| {
        let sg = SpaceGrid::new(n).unwrap();
        (MonotoneMap::identity(sg), MonotoneMap::from_fn(sg, |x| x * x).unwrap())
    };
    for pair in [smooth_pair as fn(usize) -> (MonotoneMap, MonotoneMap), sq] {
        let (a, b) = pair(64);
        let coarse = solve_geodesic(&a, &b, &SolverOptions::with_steps(32)).unwrap();
        let (a, b) = pair(128);
        let fine = solve_geodesic(&a, &b, &SolverOptions::with_steps(64)).unwrap();
        assert!(coarse.converged && fine.converged);
        let rel = (coarse.distance - fine.distance).abs() / fine.distance;
        assert!(rel <= 0.02, "{} vs {}", coarse.distance, fine.distance);
    }
}

#[test]
fn id_to_square_sandwich_and_symmetry() {
    let sg = SpaceGrid::new(64).unwrap();
    let id = MonotoneMap::identity(sg);
    let sq = MonotoneMap::from_fn(sg, |x| x * x).unwrap();
    let opts = SolverOptions::with_steps(32);
    let ab = solve_geodesic(&id, &sq, &opts).unwrap();
    let ba = solve_geodesic(&sq, &id, &opts).unwrap();
    assert!(ab.converged && ab.grad_norm <= opts.grad_tol);
    assert!(0.125 <= ab.distance && ab.distance <= (144.0f64 * 0.114382).sqrt());
    assert!((ab.distance - ba.distance).abs() <= 0.02 * ab.distance);
    // the reversed problem's path is the time reversal of the forward one
    let back = ba.path.reversed();
    let gap = (back.values() - ab.path.values()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(gap < 1e-4, "{gap}");
}
