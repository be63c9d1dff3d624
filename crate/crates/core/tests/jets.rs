//! Analytic 2-jets against central finite differences.

use sflab_core::atlas::{initial_sheet, Atlas, Surface, SurfacePiece};
use sflab_core::model::SystemSpec;

const REL: f64 = 1e-6;

fn sample_params(piece: &SurfacePiece, n: usize) -> Vec<[f64; 2]> {
    piece
        .sample_grid(n)
        .into_iter()
        .map(|r| [r[0], r[1]])
        .collect()
}

fn value(piece: &SurfacePiece, p: [f64; 2]) -> [f64; 3] {
    piece.jet(p).unwrap().absolute().value
}

fn jac(piece: &SurfacePiece, p: [f64; 2]) -> [[f64; 2]; 3] {
    piece.jet(p).unwrap().absolute().jac
}

fn shifted(p: [f64; 2], a: usize, h: f64) -> [f64; 2] {
    let mut q = p;
    q[a] += h;
    q
}

fn check_piece(piece: &SurfacePiece, n: usize) -> usize {
    let (_, radius) = piece.bounds();
    let h = 1e-4 * radius;
    let mut checked = 0;
    for p in sample_params(piece, n) {
        let all_inside = (0..2).all(|a| piece.in_domain(shifted(p, a, h)) && piece.in_domain(shifted(p, a, -h)));
        if !all_inside {
            continue;
        }
        let j = piece.jet(p).unwrap().absolute();
        for a in 0..2 {
            let vp = value(piece, shifted(p, a, h));
            let vm = value(piece, shifted(p, a, -h));
            let jp = jac(piece, shifted(p, a, h));
            let jm = jac(piece, shifted(p, a, -h));
            for i in 0..3 {
                let scale_j = j.jac[i][0].abs().max(j.jac[i][1].abs());
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!(
                    (fd - j.jac[i][a]).abs() <= REL * scale_j.max(f64::MIN_POSITIVE) + 1e-12 * scale_j,
                    "{}: jac[{i}][{a}] = {:e}, fd {:e} at {p:?}",
                    piece.label,
                    j.jac[i][a],
                    fd
                );
                let scale_h = j.hess[i]
                    .iter()
                    .flatten()
                    .fold(0.0f64, |m, x| m.max(x.abs()))
                    .max(scale_j);
                for b in 0..2 {
                    let fd = (jp[i][b] - jm[i][b]) / (2.0 * h);
                    assert!(
                        (fd - j.hess[i][a][b]).abs() <= REL * scale_h,
                        "{}: hess[{i}][{a}][{b}] = {:e}, fd {:e}",
                        piece.label,
                        j.hess[i][a][b],
                        fd
                    );
                }
            }
        }
        checked += 1;
    }
    checked
}

#[test]
fn initial_sheet_jets_match_differences() {
    let piece = initial_sheet(&SystemSpec::default());
    assert!(check_piece(&piece, 7) >= 10);
}

#[test]
fn bent_disk_jets_match_differences() {
    let atlas = Atlas::build(&SystemSpec::default()).unwrap();
    for m in [0, 5] {
        let piece = atlas.bent_disk(m).unwrap();
        assert!(check_piece(&piece, 9) >= 5, "too few interior samples for m = {m}");
    }
}

#[test]
fn horizontal_graph_jets_match_differences() {
    let atlas = Atlas::build(&SystemSpec::default()).unwrap();
    let a = atlas.spec.local.a;
    let h = 1e-4 * a;
    for m in [0, 3, 10] {
        let power = atlas.power(m);
        for &z in &[[0.0, 0.0], [0.3 * a, -0.2 * a], [-0.5 * a, 0.4 * a]] {
            let j = atlas.chart.horizontal_jet(power, z).unwrap();
            let scale = j.grad[0].abs().max(j.grad[1].abs());
            let hscale = j.hess.iter().flatten().fold(scale, |m, x| m.max(x.abs()));
            for a in 0..2 {
                let f = |s: f64| atlas.chart.horizontal_jet(power, shifted(z, a, s)).unwrap();
                let fd = (f(h).value - f(-h).value) / (2.0 * h);
                assert!((fd - j.grad[a]).abs() <= REL * scale, "m = {m}: grad {:e} vs {fd:e}", j.grad[a]);
                for b in 0..2 {
                    let fd = (f(h).grad[b] - f(-h).grad[b]) / (2.0 * h);
                    assert!((fd - j.hess[a][b]).abs() <= REL * hscale, "m = {m}: hess {:e} vs {fd:e}", j.hess[a][b]);
                }
            }
        }
    }
}
