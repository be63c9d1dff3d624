use sflab_core::atlas::Atlas;
use sflab_core::fold::bent_folds;
use sflab_core::model::{make_conjugate_system, Handedness, SystemSpec};
use sflab_core::moduli::estimate_dt_constant;

/// `max |∇h|` over a dense grid of `D_a(p)` with `∇h` from central
/// differences of the graph values only.
fn dense_slope(atlas: &Atlas, m: i32, n: usize) -> f64 {
    let a = atlas.spec.local.a;
    let power = atlas.power(m);
    let h = 1e-6 * a;
    let f = |x: f64, y: f64| atlas.chart.horizontal_jet(power, [x, y]).unwrap().value;
    let mut best: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a * (-1.0 + (2 * i + 1) as f64 / n as f64);
            let y = a * (-1.0 + (2 * k + 1) as f64 / n as f64);
            if x.hypot(y) > a - h {
                continue;
            }
            let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
            best = best.max(gx.hypot(gy));
        }
    }
    best
}

#[test]
fn slope_law_holds_on_a_dense_grid() {
    let atlas = Atlas::build(&SystemSpec::default()).unwrap();
    let l = atlas.spec.local;
    let sigma0 = atlas.sigma0();
    for m in [0, 8, 15] {
        let dense = dense_slope(&atlas, m, 512);
        let coarse = atlas.slope(m, 32).unwrap();
        assert!((coarse - dense).abs() <= 0.02 * dense, "m = {m}: {coarse:e} vs {dense:e}");
        let scaled = dense * (l.r / l.lambda).powi(m) / sigma0;
        assert!(scaled <= 1.05, "m = {m}: σ(D_m)·r^m/λ^m = {scaled} σ₀");
    }
}

#[test]
fn distance_constant_scales_with_rho() {
    let f = SystemSpec::default();
    let (g, _) = make_conjugate_system(&f, 2.0, 0.4, 1.5, Handedness::Preserving).unwrap();
    let af = Atlas::build(&f).unwrap();
    let ag = Atlas::build(&g).unwrap();
    let ms: Vec<i32> = (0..=20).collect();
    let cf = estimate_dt_constant(&af, &bent_folds(&af, &ms).unwrap()).unwrap();
    let cg = estimate_dt_constant(&ag, &bent_folds(&ag, &ms).unwrap()).unwrap();
    let tol = 2.0 * cf.half_width + cg.half_width + 1e-9 * cg.value;
    assert!((cg.value - 2.0 * cf.value).abs() <= tol, "{} vs 2·{}", cg.value, cf.value);
}

#[test]
fn distances_contract_by_lambda() {
    // d_{m,0}/λ^m settles to a constant; the ratio of successive distances
    // tends to λ with an error that shrinks with m.
    let atlas = Atlas::build(&SystemSpec::default()).unwrap();
    let lambda = atlas.spec.local.lambda;
    let ms: Vec<i32> = (0..=16).collect();
    let folds = bent_folds(&atlas, &ms).unwrap();
    let dev: Vec<f64> = folds
        .windows(2)
        .map(|w| (w[1].distance() / w[0].distance() / lambda - 1.0).abs())
        .collect();
    assert!(dev[12..].iter().all(|&d| d < 0.02));
    assert!(dev[15] <= dev[0]);
}
