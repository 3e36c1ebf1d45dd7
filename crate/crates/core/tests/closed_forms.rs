use std::f64::consts::PI;
use std::sync::Arc;

use affine_polya::convexgeom::{lp_mixed_volume, regular_polygon};
use affine_polya::energy::energies;
use affine_polya::gridfn::{sample_function, symmetric_rearrangement, AnalyticSpec, GridParams};
use affine_polya::specfun::gn_q_max;
use affine_polya::sphere;
use affine_polya::verify::{extremal_function, ExtremalParams};
use affine_polya::{DirectionSet, InequalityKind};

fn params(p: Option<f64>, q: Option<f64>) -> ExtremalParams {
    ExtremalParams {
        n: 2,
        p,
        q,
        ..Default::default()
    }
}

#[test]
fn extremal_profiles() {
    let sob = extremal_function(InequalityKind::Sobolev, &params(Some(1.5), None)).unwrap();
    let log = extremal_function(InequalityKind::Logsob, &params(Some(2.0), None)).unwrap();
    let gn = extremal_function(InequalityKind::Gn, &params(Some(1.5), Some(gn_q_max(2, 1.5)))).unwrap();
    let cone = extremal_function(InequalityKind::FaberKrahnInf, &params(None, None)).unwrap();
    for r in [0.0f64, 0.3, 1.0, 2.5, 7.0] {
        let x = [r * 0.6, r * 0.8];
        let s = (1.0 + r.powi(3)).powf(-1.0 / 3.0);
        assert!((sob.eval(&x).unwrap() - s).abs() < 1e-13);
        assert!((gn.eval(&x).unwrap() - s).abs() < 1e-12);
        // π^{n/2}Γ(1+n/2)/Γ(1+n(p-1)/p) at n = p = 2 is π
        assert!((log.eval(&x).unwrap() - PI * (-r * r).exp()).abs() < 1e-13);
        assert!((cone.eval(&x).unwrap() - (1.0 - r).max(0.0)).abs() < 1e-15);
    }
}

#[test]
fn self_mixed_volume_is_volume() {
    for k in [4, 6] {
        let poly = regular_polygon::<f64>(k, 1.0).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let v = lp_mixed_volume(&poly, &poly, p).unwrap();
            assert!((v - poly.volume()).abs() < 1e-12 * poly.volume());
        }
    }
    let hex = regular_polygon::<f64>(6, 1.0).unwrap();
    assert!((hex.volume() - 2.0 * 3f64.sqrt()).abs() < 1e-12);
}

fn grid(half: f64, cells: usize) -> GridParams {
    GridParams::square(-half, half, cells)
}

#[test]
fn radial_energies_and_shear_invariance() {
    let ds = DirectionSet::new(2, 720).unwrap();
    let g = AnalyticSpec::Gaussian { a: 1.0, amplitude: 1.0 };
    let f = sample_function::<f64>(&g, &grid(4.0, 256)).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let e = energies(&f, &ds, p).unwrap();
        assert!((e.plus - e.grad).abs() / e.grad < 0.015, "p = {p}");
    }
    let sheared = sample_function::<f64>(&g.sheared(vec![vec![1.0, 0.5], vec![0.0, 1.0]]), &grid(6.0, 384)).unwrap();
    let (a, b) = (energies(&f, &ds, 2.0).unwrap(), energies(&sheared, &ds, 2.0).unwrap());
    assert!((a.plus - b.plus).abs() / a.plus < 0.02);
    assert!((a.sym - b.sym).abs() / a.sym < 0.02);
}

#[test]
fn rearranged_sym_energy_is_gradient_norm() {
    let ds = DirectionSet::new(2, 720).unwrap();
    let spec: AnalyticSpec = serde_json::from_str(
        r#"{"family": "bump_sum", "params": {"bumps": [
            {"center": [-0.7, 0.2], "radius": 1.0},
            {"center": [0.8, -0.4], "radius": 0.6, "amplitude": 0.5}]}}"#,
    )
    .unwrap();
    let f = sample_function::<f64>(&spec, &grid(3.0, 256)).unwrap();
    let fs = symmetric_rearrangement(&f).unwrap();
    let e = energies(&fs, &ds, 2.0).unwrap();
    assert!((e.sym - e.grad).abs() / e.grad < 0.02);
    assert!(e.plus <= energies(&f, &ds, 2.0).unwrap().plus * 1.001);
}

#[test]
fn single_precision_tracks_double() {
    let g = AnalyticSpec::Gaussian { a: 1.0, amplitude: 1.0 };
    let f64_grid = sample_function::<f64>(&g, &grid(4.0, 128)).unwrap();
    let f32_grid = sample_function::<f32>(&g, &grid(4.0, 128)).unwrap();
    let d64 = DirectionSet::new(2, 360).unwrap();
    let d32 = Arc::new(sphere::DirectionSet::<f32>::new(2, 360).unwrap());
    let a = energies(&f64_grid, &d64, 2.0).unwrap();
    let b = energies(&f32_grid, &d32, 2.0f32).unwrap();
    assert!((a.plus - b.plus as f64).abs() / a.plus < 1e-4);
    assert!((a.grad - PI.sqrt()).abs() / PI.sqrt() < 0.015);
}
