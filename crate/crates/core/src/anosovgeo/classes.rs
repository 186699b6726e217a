// Conjugacy classes of closed geodesics and the length spectrum.

use super::geodesic::{canonical_lift, sample_closed_geodesic, same_lift};
use super::group::{FuchsianGroup, Letter, Sl2, Word};
use super::GeoError;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;

/// Default cap on the number of candidate words generated.
pub const DEFAULT_WORD_BUDGET: usize = 2_000_000;
/// Step bound used when walking a geodesic to identify its class.
const IDENTIFY_STEP: f64 = 0.05;

/// Free homotopy class of a closed geodesic, with γ and γ⁻¹ identified.
#[derive(Debug, Clone)]
pub struct ClosedGeodesicClass {
    pub word: Word,
    pub matrix: Sl2,
    pub trace: f64,
    pub length: f64,
    pub primitive: bool,
    pub root: Word,
    pub multiplicity: u32,
    /// |det(Id − P_γ)|^{1/2} = 2 sinh(ℓ/2) in constant curvature −1.
    pub poincare_factor: f64,
    pub morse_index: u32,
    /// Always true: the class stands for both orientations.
    pub inverse_merged: bool,
    lift: (Complex64, Complex64),
}

impl ClosedGeodesicClass {
    pub fn from_word(group: &FuchsianGroup, word: Word) -> Result<Self, GeoError> {
        if word.is_empty() {
            return Err(GeoError::InvalidWord(String::new()));
        }
        let matrix = group.evaluate(&word);
        let trace = matrix.trace();
        let length = matrix
            .translation_length()
            .ok_or(GeoError::NotHyperbolic(trace))?;
        let (root, multiplicity) = word.primitive_root();
        let disk = matrix.to_su11();
        let steps = ((length / IDENTIFY_STEP).ceil() as usize).max(64);
        let lift = canonical_lift(&sample_closed_geodesic(&disk, group, steps)?, group);
        Ok(Self {
            word,
            matrix,
            trace,
            length,
            primitive: multiplicity == 1,
            root,
            multiplicity,
            poincare_factor: 2.0 * (0.5 * length).sinh(),
            morse_index: 0,
            inverse_merged: true,
            lift,
        })
    }

    /// Length of the primitive root, T♯ = T/m.
    pub fn primitive_length(&self) -> f64 {
        self.length / self.multiplicity as f64
    }

    /// Same closed geodesic (as an unoriented curve).
    pub fn same_geodesic(&self, other: &Self) -> bool {
        (self.length - other.length).abs() < 1e-8 && same_lift(&self.lift, &other.lift)
    }

    /// Copy with the representative matrix conjugated by `h`.
    pub fn conjugated(&self, h: &Sl2) -> Self {
        let mut c = self.clone();
        c.matrix = h.mul(&self.matrix).mul(&h.inverse());
        c
    }
}

fn push_words(
    len: usize,
    letters: usize,
    prefix: &mut Vec<Letter>,
    out: &mut Vec<Word>,
    seen: &mut HashSet<Word>,
) {
    if prefix.len() == len {
        let w = Word(prefix.clone());
        if w.is_cyclically_reduced() {
            let c = w.canonical();
            if c == w && seen.insert(c) {
                out.push(w);
            }
        }
        return;
    }
    for i in 0..letters {
        let l = Letter(i as u8);
        if prefix.last().map_or(false, |&p| p == l.inverse()) {
            continue;
        }
        prefix.push(l);
        push_words(len, letters, prefix, out, seen);
        prefix.pop();
    }
}

/// Number of reduced words of length 1..=w over `letters` symbols.
fn candidate_count(w: usize, letters: usize) -> usize {
    let mut total: usize = 0;
    let mut layer = letters;
    for _ in 0..w {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(letters - 1);
    }
    total
}

/// Geometric classes of cyclically reduced words of length ≤ `max_len`,
/// sorted by length then word. Words representing the same closed geodesic
/// are merged, keeping the shortest.
pub fn enumerate_classes(
    group: &FuchsianGroup,
    max_len: usize,
) -> Result<Vec<ClosedGeodesicClass>, GeoError> {
    enumerate_classes_with_budget(group, max_len, DEFAULT_WORD_BUDGET)
}

pub fn enumerate_classes_with_budget(
    group: &FuchsianGroup,
    max_len: usize,
    budget: usize,
) -> Result<Vec<ClosedGeodesicClass>, GeoError> {
    if max_len == 0 {
        return Err(GeoError::InvalidParameter("word length must be at least 1".into()));
    }
    let letters = 2 * group.generator_count();
    let count = candidate_count(max_len, letters);
    if count > budget {
        return Err(GeoError::EnumerationBudget {
            max_len,
            words: count,
            budget,
        });
    }
    let mut words = Vec::new();
    let mut seen = HashSet::new();
    for len in 1..=max_len {
        push_words(len, letters, &mut Vec::with_capacity(len), &mut words, &mut seen);
    }
    let candidates: Vec<ClosedGeodesicClass> = words
        .into_par_iter()
        .filter_map(|w| {
            // Identity and elliptic words cannot occur in a surface group;
            // anything with |tr| ≤ 2 is dropped as trivial.
            let m = group.evaluate(&w);
            if m.trace().abs() <= 2.0 + 1e-9 {
                return None;
            }
            Some(ClosedGeodesicClass::from_word(group, w))
        })
        .collect::<Result<_, _>>()?;
    let mut classes: Vec<ClosedGeodesicClass> = Vec::new();
    // Candidates arrive ordered by word length, so the first representative
    // kept is a shortest one.
    for c in candidates {
        let lo = classes.partition_point(|k| k.length < c.length - 1e-8);
        let dup = classes[lo..]
            .iter()
            .take_while(|k| k.length <= c.length + 1e-8)
            .any(|k| k.same_geodesic(&c));
        if !dup {
            let pos = classes.partition_point(|k| k.length <= c.length);
            classes.insert(pos, c);
        }
    }
    classes.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then_with(|| a.word.len().cmp(&b.word.len()))
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(classes)
}

/// Shortest closed geodesic length among the classes.
pub fn systole(classes: &[ClosedGeodesicClass]) -> Option<f64> {
    classes.iter().map(|c| c.length).min_by(f64::total_cmp)
}

/// Pair of distinct geometric classes with nearly equal lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub first: String,
    pub second: String,
    pub length_first: f64,
    pub length_second: f64,
    /// |tr| agrees to rounding: the lengths coincide exactly (a symmetry
    /// orbit) rather than approximately.
    pub same_trace: bool,
}

pub fn length_spectrum_report(classes: &[ClosedGeodesicClass], tol: f64) -> Vec<Collision> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..classes.len()).collect();
    idx.sort_by(|&i, &j| classes[i].length.total_cmp(&classes[j].length));
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let (ci, cj) = (&classes[i], &classes[j]);
            if cj.length - ci.length >= tol {
                break;
            }
            let scale = ci.trace.abs().max(cj.trace.abs());
            out.push(Collision {
                first: ci.word.to_string(),
                second: cj.word.to_string(),
                length_first: ci.length,
                length_second: cj.length,
                same_trace: (ci.trace.abs() - cj.trace.abs()).abs() <= 1e-12 * scale,
            });
        }
    }
    out
}

pub fn classes_to_csv(classes: &[ClosedGeodesicClass]) -> String {
    let mut out = String::from("word,length,primitive,multiplicity,poincare_factor\n");
    for c in classes {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.word, c.length, c.primitive, c.multiplicity, c.poincare_factor
        );
    }
    out
}
