//! Composition words of chart maps and their exact 2-jets.

use alloc::vec::Vec;
use core::fmt;

use crate::jet::{FramedJet, Jet2};
use crate::model::SystemSpec;
use crate::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    /// `L^k`.
    L(i32),
    G,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::L(k) => write!(f, "L^{k}"),
            Atom::G => f.write_str("G"),
        }
    }
}

/// Atoms applied left to right. Atoms listed in `clipped` must land inside
/// the disk `|z| ≤ a`; every `G` must be fed from inside its patch.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChartWord {
    atoms: Vec<Atom>,
    clipped: Vec<usize>,
}

impl ChartWord {
    pub fn new(atoms: Vec<Atom>) -> Self {
        ChartWord {
            atoms,
            clipped: Vec::new(),
        }
    }

    /// Requires the output of atom `index` to stay in `|z| ≤ a`.
    pub fn clip_after(mut self, index: usize) -> Self {
        if !self.clipped.contains(&index) {
            self.clipped.push(index);
        }
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn then(mut self, atom: Atom) -> Self {
        self.atoms.push(atom);
        self
    }

    /// Total number of `L` iterations.
    pub fn linear_power(&self) -> i32 {
        self.atoms
            .iter()
            .map(|a| match a {
                Atom::L(k) => *k,
                Atom::G => 0,
            })
            .sum()
    }
}

impl fmt::Display for ChartWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

/// How the input jet of a word is expressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WordInput {
    /// Chart coordinates `(z, t)`, possibly with a pending frame.
    Chart(FramedJet),
    /// The `(u, v, s)` coordinates of the first `G` atom.
    GLocal(Jet2),
}

/// 2-jet of the word applied to the base plane `{t = 0}` at `(x, y)`.
pub fn evaluate_word(s: &SystemSpec, w: &ChartWord, base: [f64; 2]) -> Result<FramedJet> {
    evaluate_word_from(s, w, WordInput::Chart(FramedJet::new(Jet2::base_plane(base))))
}

pub fn evaluate_word_from(s: &SystemSpec, w: &ChartWord, input: WordInput) -> Result<FramedJet> {
    let g = &s.global;
    let (mut cur, mut local) = match input {
        WordInput::Chart(j) => (j, None),
        WordInput::GLocal(j) => {
            if w.atoms.first() != Some(&Atom::G) {
                return Err(LabError::domain("local G input needs a leading G atom"));
            }
            (FramedJet::new(j), Some(j))
        }
    };
    for (i, atom) in w.atoms.iter().enumerate() {
        match *atom {
            Atom::L(k) => {
                let (m, l) = s.local.power(k);
                cur = cur.then_linear(m, l);
            }
            Atom::G => {
                let jl = match local.take() {
                    Some(j) => j,
                    None => {
                        let f = g.frame();
                        cur.absolute().similarity(f, -g.q * f, 1.0, 0.0)
                    }
                };
                if !g.in_patch(jl.value) || !jl.value.iter().all(|v| v.is_finite()) {
                    return Err(LabError::WordDomain { atom: i });
                }
                cur = FramedJet::new(g.apply_jet_local(&jl));
            }
        }
        if w.clipped.contains(&i) && cur.z_norm() > s.local.a * (1.0 + 1e-12) {
            return Err(LabError::WordDomain { atom: i });
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_linear_atom() {
        let s = SystemSpec::default();
        let j = evaluate_word(&s, &ChartWord::new(vec![Atom::L(1)]), [0.2, 0.1])
            .unwrap()
            .absolute();
        let m = s.local.multiplier();
        assert!((j.jac[0][0] - m.re).abs() < 1e-15);
        assert!((j.jac[1][0] - m.im).abs() < 1e-15);
        assert!((j.jac[0][1] + m.im).abs() < 1e-15);
        assert!((j.jac[1][1] - m.re).abs() < 1e-15);
        assert_eq!(j.jac[2], [0.0, 0.0]);
    }

    #[test]
    fn g_at_q_is_the_tangency() {
        let s = SystemSpec::default();
        let j = evaluate_word(&s, &ChartWord::new(vec![Atom::G]), [0.5, 0.0])
            .unwrap()
            .absolute();
        assert_eq!(j.value, [0.0, 0.0, 0.5]);
        let graph = j.implicit_graph([1, 2], 0).unwrap();
        assert_eq!(graph.hess[1][1], 2.0);
        assert_eq!(graph.grad, [0.0, 0.0]);
    }

    #[test]
    fn leaving_the_patch_names_the_atom() {
        let s = SystemSpec::default();
        let w = ChartWord::new(vec![Atom::G, Atom::L(1), Atom::G]);
        match evaluate_word(&s, &w, [0.5, 0.0]) {
            Err(LabError::WordDomain { atom }) => assert_eq!(atom, 2),
            other => panic!("{other:?}"),
        }
        let w = ChartWord::new(vec![Atom::L(3)]).clip_after(0);
        assert!(matches!(
            evaluate_word(&s, &w, [0.5, 0.0]),
            Err(LabError::WordDomain { atom: 0 })
        ));
    }

    #[test]
    fn local_input_matches_chart_input() {
        let s = SystemSpec::default();
        let w = ChartWord::new(vec![Atom::G, Atom::L(2)]);
        let p = [0.55, 0.03];
        let a = evaluate_word(&s, &w, p).unwrap();
        let l = s.global.to_local(crate::geometry::SpacePoint::new(p[0], p[1], 0.0));
        let base = Jet2::base_plane([l[0], l[1]]);
        let b = evaluate_word_from(&s, &w, WordInput::GLocal(base)).unwrap();
        assert!((a.point().z - b.point().z).norm() < 1e-15);
        assert_eq!(a.zf, b.zf);
    }
}
