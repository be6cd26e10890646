//! Genus-two surface group representations and numerical Anosov diagnostics.
//!
//! Representations are given on the four generators of a one-relator presentation.
//! Gap scans enumerate words that are reduced with respect to Dehn's algorithm, so word
//! length stays a faithful proxy for the length of the group element.

use nalgebra::{Matrix2, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::cli::fmt_float;
use crate::error::{invalid, Error, Result};
use crate::flag::Flag;
use crate::multicone::{is_nested, nest_estimate, Multicone};
use crate::plane::{conic_eval, dual_conic_eval, PlanePoint, ReduciblePlaneFrame};
use crate::spectral::{attracting_flag, gap_vector_with_inverse, GapVector};
use crate::symspace::{act_on_flag, GroupElem};

/// Tolerance on `|rho(R) - Id|` for the relator `R`.
pub const RELATION_TOL: f64 = 1e-9;
/// Longest word length enumerated exhaustively in a gap scan.
pub const EXHAUSTIVE_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    A1,
    B1,
    A2,
    B2,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Self::A1, Self::B1, Self::A2, Self::B2];

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        ["a1", "b1", "a2", "b2"][self.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: Generator,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: Generator, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Self { inverse: !self.inverse, ..self }
    }

    /// Index in `0..8`, inverses odd.
    fn code(self) -> u8 {
        2 * self.generator.index() as u8 + self.inverse as u8
    }

    fn from_code(c: u8) -> Self {
        Self { generator: Generator::ALL[(c / 2) as usize], inverse: c % 2 == 1 }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.generator.name())
        } else {
            f.write_str(self.generator.name())
        }
    }
}

/// A freely reduced word in the generators; written as space-separated letters such as
/// `a1 b1^-1 a2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if letters.windows(2).any(|w| w[1] == w[0].inv()) {
            return Err(invalid("word is not freely reduced"));
        }
        Ok(Self(letters))
    }

    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(a), Some(b)) => self.0.len() == 1 || *a != b.inv(),
            _ => true,
        }
    }

    /// Free reduction of the concatenation.
    pub fn concat(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for l in &other.0 {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(*l);
            }
        }
        Self(out)
    }

    fn from_codes(codes: &[u8]) -> Self {
        Self(codes.iter().map(|c| Letter::from_code(*c)).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let (name, inverse) = match tok.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let generator = Generator::ALL
                .into_iter()
                .find(|g| g.name() == name)
                .ok_or_else(|| invalid(format!("unknown generator {tok:?}")))?;
            letters.push(Letter::new(generator, inverse));
        }
        Self::new(letters)
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for Word {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Genus two, generators `a1, b1, a2, b2` and a single relator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceGroupPresentation {
    pub genus: u32,
    pub relation: Word,
}

impl SurfaceGroupPresentation {
    /// `[a1, b1][a2, b2]`.
    pub fn commutator() -> Self {
        Self { genus: 2, relation: "a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1".parse().unwrap() }
    }

    /// Opposite sides of an octagon identified: `x1 x2 x3 x4 x1^-1 x2^-1 x3^-1 x4^-1`
    /// with `x1 = a1, x2 = b1^-1, x3 = a2, x4 = b2^-1`.
    pub fn opposite_sides() -> Self {
        Self { genus: 2, relation: "a1 b1^-1 a2 b2^-1 a1^-1 b1 a2^-1 b2".parse().unwrap() }
    }

    pub fn candidates() -> [Self; 2] {
        [Self::commutator(), Self::opposite_sides()]
    }

    /// The candidate relator satisfied by the octagon generators.
    pub fn octagon() -> Self {
        let gens = octagon_fuchsian();
        let images: Vec<Matrix3<f64>> = gens.iter().map(|a| embed_block(a, 1.0)).collect();
        Self::candidates()
            .into_iter()
            .find(|p| relation_residual_of(&images, &p.relation) <= RELATION_TOL)
            .expect("one candidate relator holds for the octagon group")
    }

    /// Length-5 subwords of cyclic conjugates of the relator and its inverse; a word
    /// containing one of them can be shortened.
    fn dehn_forbidden(&self) -> HashSet<[u8; 5]> {
        let mut out = HashSet::new();
        for r in [self.relation.clone(), self.relation.inverse()] {
            let codes: Vec<u8> = r.letters().iter().map(|l| l.code()).collect();
            let n = codes.len();
            for start in 0..n {
                let mut piece = [0u8; 5];
                for (k, p) in piece.iter_mut().enumerate() {
                    *p = codes[(start + k) % n];
                }
                out.insert(piece);
            }
        }
        out
    }
}

/// Hyperbolic generators of the regular-octagon Fuchsian group: the element of trace
/// `2(1 + sqrt 2)` conjugated by rotations through multiples of `pi/4`.
pub fn octagon_fuchsian() -> [Matrix2<f64>; 4] {
    let c = 1.0 + std::f64::consts::SQRT_2;
    let s = (c * c - 1.0).sqrt();
    let t = Matrix2::new(c, s, s, c);
    let rot = |a: f64| Matrix2::new(a.cos(), a.sin(), -a.sin(), a.cos());
    let g = |k: f64| rot(k * std::f64::consts::PI / 8.0) * t * rot(-k * std::f64::consts::PI / 8.0);
    [g(0.0), g(1.0), g(2.0), g(3.0)]
}

fn check_sl2(a: &Matrix2<f64>) -> Result<()> {
    if (a.determinant() - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("determinant {} is not 1", a.determinant())));
    }
    Ok(())
}

fn embed_block(a: &Matrix2<f64>, scale: f64) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&(a * scale));
    m[(2, 2)] = (-2.0 * scale.ln()).exp();
    m
}

/// `diag(A, 1)`.
pub fn iota_red(a: &Matrix2<f64>) -> Result<GroupElem> {
    check_sl2(a)?;
    GroupElem::new(embed_block(a, 1.0))
}

/// The symmetric square of `A`, in the basis where it preserves a quadratic form.
pub fn iota_irr(a: &Matrix2<f64>) -> Result<GroupElem> {
    check_sl2(a)?;
    let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let t = std::f64::consts::SQRT_2;
    GroupElem::new(Matrix3::new(
        p * p,
        t * p * q,
        q * q,
        t * p * r,
        p * s + q * r,
        t * q * s,
        r * r,
        t * r * s,
        s * s,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ReducibleFuchsian,
    IrreducibleFuchsian,
    BarbotTwist,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ReducibleFuchsian => "reducible-fuchsian",
            Self::IrreducibleFuchsian => "irreducible-fuchsian",
            Self::BarbotTwist => "barbot-twist",
        })
    }
}

/// Images of the four generators; the relator is checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    images: [GroupElem; 4],
    inverses: [GroupElem; 4],
    pub family: Family,
    /// Character values on the generators for twisted families.
    pub chi: Option<[f64; 4]>,
    pub presentation: SurfaceGroupPresentation,
}

fn relation_residual_of(images: &[Matrix3<f64>], relation: &Word) -> f64 {
    let mut m = Matrix3::identity();
    for l in relation.letters() {
        let g = images[l.generator.index()];
        m *= if l.inverse { g.try_inverse().unwrap_or(Matrix3::from_element(f64::NAN)) } else { g };
    }
    (m - Matrix3::identity()).amax()
}

impl Representation {
    pub fn new(
        images: [GroupElem; 4],
        family: Family,
        chi: Option<[f64; 4]>,
        presentation: SurfaceGroupPresentation,
    ) -> Result<Self> {
        let inverses = images.map(|g| g.inverse());
        let rep = Self { images, inverses, family, chi, presentation };
        let r = rep.relation_residual();
        if !(r <= RELATION_TOL) {
            return Err(invalid(format!("relation residual {r:e} exceeds {RELATION_TOL:e}")));
        }
        Ok(rep)
    }

    /// `iota_red` composed with the octagon group.
    pub fn reducible_fuchsian() -> Self {
        let images = octagon_fuchsian().map(|a| iota_red(&a).unwrap());
        Self::new(images, Family::ReducibleFuchsian, None, SurfaceGroupPresentation::octagon())
            .unwrap()
    }

    /// `iota_irr` composed with the octagon group.
    pub fn irreducible_fuchsian() -> Self {
        let images = octagon_fuchsian().map(|a| iota_irr(&a).unwrap());
        Self::new(images, Family::IrreducibleFuchsian, None, SurfaceGroupPresentation::octagon())
            .unwrap()
    }

    pub fn image(&self, g: Generator) -> &GroupElem {
        &self.images[g.index()]
    }

    fn letter(&self, l: Letter) -> &Matrix3<f64> {
        if l.inverse {
            self.inverses[l.generator.index()].matrix()
        } else {
            self.images[l.generator.index()].matrix()
        }
    }

    /// `(rho(w), rho(w)^{-1})`, the inverse evaluated letter by letter.
    pub fn eval_pair(&self, w: &Word) -> (Matrix3<f64>, Matrix3<f64>) {
        let m = w.letters().iter().fold(Matrix3::identity(), |acc, l| acc * self.letter(*l));
        let inv = w.letters().iter().rev().fold(Matrix3::identity(), |acc, l| acc * self.letter(l.inv()));
        (m, inv)
    }

    pub fn eval(&self, w: &Word) -> GroupElem {
        GroupElem::from_trusted(self.eval_pair(w).0)
    }

    pub fn relation_residual(&self) -> f64 {
        let images: Vec<Matrix3<f64>> = self.images.iter().map(|g| *g.matrix()).collect();
        relation_residual_of(&images, &self.presentation.relation)
    }

    pub fn gap(&self, w: &Word) -> GapVector {
        let (m, inv) = self.eval_pair(w);
        gap_vector_with_inverse(&m, &inv)
    }
}

/// `gamma -> diag(e^{chi(gamma)} j(gamma), e^{-2 chi(gamma)})` for a character `chi`
/// given by its values on the generators.
pub fn barbot_twist(fuchsian: &[Matrix2<f64>; 4], chi: [f64; 4]) -> Result<Representation> {
    if chi.iter().any(|c| !c.is_finite()) {
        return Err(invalid("character values must be finite"));
    }
    let mut images = Vec::with_capacity(4);
    for (a, c) in fuchsian.iter().zip(chi) {
        check_sl2(a)?;
        images.push(GroupElem::new(embed_block(a, c.exp()))?);
    }
    let images: [GroupElem; 4] = images.try_into().unwrap();
    let raw: Vec<Matrix3<f64>> = fuchsian.iter().map(|a| embed_block(a, 1.0)).collect();
    let presentation = SurfaceGroupPresentation::candidates()
        .into_iter()
        .find(|p| relation_residual_of(&raw, &p.relation) <= RELATION_TOL)
        .ok_or_else(|| invalid("the Fuchsian quadruple satisfies no candidate relator"))?;
    Representation::new(images, Family::BarbotTwist, Some(chi), presentation)
}

/// Per-length statistics of a gap scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub length: usize,
    pub count: usize,
    pub min_sg12: f64,
    pub med_sg12: f64,
    pub min_sg23: f64,
    /// Over cyclically reduced words only.
    pub min_lg12: f64,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapScan {
    pub family: Family,
    pub chi: Option<[f64; 4]>,
    pub seed: u64,
    pub max_len: usize,
    pub sample_budget: usize,
    pub per_length: Vec<LengthStats>,
    /// Least-squares fit `min_sg12 ~ A * length - B`.
    #[serde(rename = "A")]
    pub slope_a: Option<f64>,
    #[serde(rename = "B")]
    pub offset_b: Option<f64>,
    /// Set when the budget ran out before every length was covered.
    pub partial: bool,
    /// Largest `|sg12(w) - sg23(w^{-1})|` over scanned words.
    pub inverse_symmetry_defect: f64,
    pub words_evaluated: usize,
}

impl GapScan {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["length", "count", "min_sg12", "med_sg12", "min_sg23", "min_lg12"])?;
        for s in &self.per_length {
            wr.write_record([
                s.length.to_string(),
                s.count.to_string(),
                fmt_float(s.min_sg12),
                fmt_float(s.med_sg12),
                fmt_float(s.min_sg23),
                fmt_float(s.min_lg12),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

struct Sample {
    sg12: f64,
    sg23: f64,
    lg12: Option<f64>,
    inverse_defect: f64,
}

fn measure(rep: &Representation, w: &Word) -> Sample {
    let g = rep.gap(w);
    let gi = rep.gap(&w.inverse());
    Sample {
        sg12: g.sg12,
        sg23: g.sg23,
        lg12: w.is_cyclically_reduced().then_some(g.lg12),
        inverse_defect: (g.sg12 - gi.sg23).abs(),
    }
}

fn allowed(prefix: &[u8], next: u8, forbidden: &HashSet<[u8; 5]>) -> bool {
    if let Some(&last) = prefix.last() {
        if last ^ 1 == next {
            return false;
        }
    }
    if prefix.len() >= 4 {
        let n = prefix.len();
        let piece = [prefix[n - 4], prefix[n - 3], prefix[n - 2], prefix[n - 1], next];
        if forbidden.contains(&piece) {
            return false;
        }
    }
    true
}

/// All Dehn-reduced words of length `1..=max_len` starting with `first`, in lexicographic order.
fn enumerate_from(first: u8, max_len: usize, forbidden: &HashSet<[u8; 5]>) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![first]];
    while let Some(w) = stack.pop() {
        if w.len() < max_len {
            for c in (0..8u8).rev() {
                if allowed(&w, c, forbidden) {
                    let mut v = w.clone();
                    v.push(c);
                    stack.push(v);
                }
            }
        }
        out.push(w);
    }
    out
}

/// Dehn-reduced enumeration of words of length `1..=max_len`, in (length, lexicographic) order.
pub fn reduced_words(presentation: &SurfaceGroupPresentation, max_len: usize) -> Vec<Word> {
    let forbidden = presentation.dehn_forbidden();
    let mut all: Vec<Vec<u8>> = (0..8u8).flat_map(|f| enumerate_from(f, max_len, &forbidden)).collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all.iter().map(|c| Word::from_codes(c)).collect()
}

/// A random Dehn-reduced word, each letter uniform among the admissible continuations.
fn random_word(rng: &mut ChaCha8Rng, len: usize, forbidden: &HashSet<[u8; 5]>) -> Vec<u8> {
    let mut w: Vec<u8> = Vec::with_capacity(len);
    while w.len() < len {
        let options: Vec<u8> = (0..8u8).filter(|c| allowed(&w, *c, forbidden)).collect();
        w.push(options[rng.gen_range(0..options.len())]);
    }
    w
}

fn summarize(length: usize, samples: &[Sample], exhaustive: bool) -> LengthStats {
    let mut sg: Vec<f64> = samples.iter().map(|s| s.sg12).collect();
    sg.sort_by(f64::total_cmp);
    let med = if sg.is_empty() {
        f64::NAN
    } else if sg.len() % 2 == 1 {
        sg[sg.len() / 2]
    } else {
        0.5 * (sg[sg.len() / 2 - 1] + sg[sg.len() / 2])
    };
    LengthStats {
        length,
        count: samples.len(),
        min_sg12: sg.first().copied().unwrap_or(f64::NAN),
        med_sg12: med,
        min_sg23: samples.iter().map(|s| s.sg23).fold(f64::INFINITY, f64::min),
        min_lg12: samples.iter().filter_map(|s| s.lg12).fold(f64::INFINITY, f64::min),
        exhaustive,
    }
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - xm).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = points.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum::<f64>() / sxx;
    Some((slope, ym - slope * xm))
}

/// Exhaustive scan up to [`EXHAUSTIVE_LEN`], seeded random words beyond, all within
/// `sample_budget` evaluated words.
pub fn gap_scan(rep: &Representation, max_len: usize, sample_budget: usize, seed: u64) -> Result<GapScan> {
    if max_len < 1 {
        return Err(invalid("max_len must be at least 1"));
    }
    let forbidden = rep.presentation.dehn_forbidden();
    let exhaustive_len = max_len.min(EXHAUSTIVE_LEN);
    let mut per_length = Vec::new();
    let mut partial = false;
    let mut defect: f64 = 0.0;
    let mut used = 0usize;

    // Shard by first letter; each shard is already in lexicographic order.
    let shards: Vec<Vec<(usize, Sample)>> = (0..8u8)
        .into_par_iter()
        .map(|f| {
            enumerate_from(f, exhaustive_len, &forbidden)
                .into_iter()
                .map(|c| (c.len(), measure(rep, &Word::from_codes(&c))))
                .collect()
        })
        .collect();
    let mut by_len: Vec<Vec<Sample>> = (0..=exhaustive_len).map(|_| Vec::new()).collect();
    for shard in shards {
        for (len, s) in shard {
            by_len[len].push(s);
        }
    }
    for (len, samples) in by_len.iter().enumerate().skip(1) {
        if used + samples.len() > sample_budget {
            partial = true;
            break;
        }
        used += samples.len();
        defect = samples.iter().fold(defect, |d, s| d.max(s.inverse_defect));
        per_length.push(summarize(len, samples, true));
    }

    if !partial && max_len > exhaustive_len {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lengths = max_len - exhaustive_len;
        let per = (sample_budget - used) / lengths;
        if per == 0 {
            partial = true;
        } else {
            for len in exhaustive_len + 1..=max_len {
                let words: Vec<Vec<u8>> = (0..per).map(|_| random_word(&mut rng, len, &forbidden)).collect();
                let samples: Vec<Sample> =
                    words.par_iter().map(|c| measure(rep, &Word::from_codes(c))).collect();
                used += samples.len();
                defect = samples.iter().fold(defect, |d, s| d.max(s.inverse_defect));
                per_length.push(summarize(len, &samples, false));
            }
        }
    }

    let pts: Vec<(f64, f64)> = per_length.iter().map(|s| (s.length as f64, s.min_sg12)).collect();
    let fit = fit_line(&pts);
    Ok(GapScan {
        family: rep.family,
        chi: rep.chi,
        seed,
        max_len,
        sample_budget,
        per_length,
        slope_a: fit.map(|f| f.0),
        offset_b: fit.map(|f| -f.1),
        partial,
        inverse_symmetry_defect: defect,
        words_evaluated: used,
    })
}

/// The attracting flag of `rho(w)`.
pub fn limit_flag_sample(rep: &Representation, w: &Word) -> Result<Flag> {
    attracting_flag(&rep.eval(w))
}

/// Carries `diag(A, 1)` to the block form acting on the first and third coordinates,
/// where the model reducible plane lives.
fn model_change() -> GroupElem {
    GroupElem::from_trusted(Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicPositionReport {
    pub samples: usize,
    pub lines_outside: usize,
    pub planes_meet_interior: usize,
    pub min_line_margin: f64,
    pub min_plane_margin: f64,
    pub max_word_len: usize,
    pub seed: u64,
}

/// Limit flags of random hyperbolic words against the conic of the model plane: lines
/// should lie outside it and planes should cross its interior.
pub fn conic_position_check(rep: &Representation, n_samples: usize, seed: u64) -> Result<ConicPositionReport> {
    if rep.family != Family::ReducibleFuchsian {
        return Err(Error::Precondition("conic position is checked on the reducible Fuchsian family".into()));
    }
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    const MAX_LEN: usize = 8;
    let forbidden = rep.presentation.dehn_forbidden();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let change = model_change().inverse();
    let mut report = ConicPositionReport {
        samples: 0,
        lines_outside: 0,
        planes_meet_interior: 0,
        min_line_margin: f64::INFINITY,
        min_plane_margin: f64::INFINITY,
        max_word_len: MAX_LEN,
        seed,
    };
    while report.samples < n_samples {
        let len = rng.gen_range(1..=MAX_LEN);
        let w = Word::from_codes(&random_word(&mut rng, len, &forbidden));
        if !w.is_cyclically_reduced() {
            continue;
        }
        let f = act_on_flag(&change, &limit_flag_sample(rep, &w)?)?;
        let line = conic_eval(&f.line);
        let plane = dual_conic_eval(&f.plane);
        report.samples += 1;
        report.lines_outside += (line > 0.0) as usize;
        report.planes_meet_interior += (plane > 0.0) as usize;
        report.min_line_margin = report.min_line_margin.min(line);
        report.min_plane_margin = report.min_plane_margin.min(plane);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub t: f64,
    pub nested: bool,
    pub estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowNestingReport {
    pub axis_angle: f64,
    pub samples_per_side: usize,
    pub steps: Vec<FlowStep>,
    pub all_nested: bool,
    pub estimates_increasing: bool,
}

/// Nestedness of the model multicone with axis angle `direction_angle` and its
/// translates along the axis geodesic by each time `t` (moving distance `t` in the plane).
///
/// `n_boundary_samples` is the target number of chart samples; the chart grid uses
/// its square root per side.
pub fn flow_nesting_certify(direction_angle: f64, times: &[f64], n_boundary_samples: usize) -> Result<FlowNestingReport> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("flow times must be nonnegative"));
    }
    let per_side = ((n_boundary_samples as f64).sqrt().ceil() as usize).max(4);
    let u = Multicone::new(ReduciblePlaneFrame::model(), PlanePoint::identity(), direction_angle)?;
    let mut steps = Vec::with_capacity(times.len());
    for &t in times {
        let ut = u.translated(t);
        let nested = t > 0.0 && is_nested(&u, &ut, per_side)?;
        let estimate = if nested { Some(nest_estimate(&u, &ut, per_side)?.lower) } else { None };
        steps.push(FlowStep { t, nested, estimate });
    }
    let all_nested = steps.iter().all(|s| s.nested);
    let mut ordered: Vec<&FlowStep> = steps.iter().collect();
    ordered.sort_by(|a, b| a.t.total_cmp(&b.t));
    let estimates_increasing = all_nested
        && ordered.windows(2).all(|w| w[1].estimate.unwrap() > w[0].estimate.unwrap());
    Ok(FlowNestingReport { axis_angle: direction_angle, samples_per_side: per_side, steps, all_nested, estimates_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flag::ProjectivePoint;

    const HALF_LEN: f64 = 1.528_570_919_480_998;

    #[test]
    fn octagon_generators() {
        for a in octagon_fuchsian() {
            assert!((a.trace() - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12);
            assert!((a.determinant() - 1.0).abs() < 1e-12);
            let ell = 2.0 * (a.trace() / 2.0).acosh();
            assert!((ell / 2.0 - HALF_LEN).abs() < 1e-9);
        }
        let p = SurfaceGroupPresentation::octagon();
        assert_eq!(p, SurfaceGroupPresentation::opposite_sides());
        assert!(Representation::reducible_fuchsian().relation_residual() <= RELATION_TOL);
        assert!(Representation::irreducible_fuchsian().relation_residual() <= RELATION_TOL);
    }

    #[test]
    fn word_parsing_and_reduction() {
        let w: Word = "a1 b1^-1 a2".parse().unwrap();
        assert_eq!(w.to_string(), "a1 b1^-1 a2");
        assert!("a1 a1^-1".parse::<Word>().is_err());
        assert!("c3".parse::<Word>().is_err());
        assert_eq!(w.concat(&w.inverse()), Word::identity());
        assert!(!"a1 b1 a1^-1".parse::<Word>().unwrap().is_cyclically_reduced());
    }

    #[test]
    fn embeddings() {
        let mu: f64 = 3.0;
        let d = Matrix2::new(mu, 0.0, 0.0, 1.0 / mu);
        let r = iota_red(&d).unwrap();
        assert!((r.matrix() - Matrix3::from_diagonal(&nalgebra::Vector3::new(mu, 1.0 / mu, 1.0))).amax() < 1e-15);
        let i = iota_irr(&d).unwrap();
        assert!((i.matrix() - Matrix3::from_diagonal(&nalgebra::Vector3::new(mu * mu, 1.0, 1.0 / (mu * mu)))).amax() < 1e-14);
        assert!(iota_red(&Matrix2::new(2.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn twist_eigenvalues() {
        let rep = barbot_twist(&octagon_fuchsian(), [1.0, 0.0, 0.0, 0.0]).unwrap();
        let ev = rep.image(Generator::A1).matrix().complex_eigenvalues();
        let mut logs: Vec<f64> = ev.iter().map(|c| c.norm().ln()).collect();
        logs.sort_by(f64::total_cmp);
        let expect = [-2.0, 1.0 - HALF_LEN, 1.0 + HALF_LEN];
        for (a, b) in logs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{logs:?}");
        }
        let plain = barbot_twist(&octagon_fuchsian(), [0.0; 4]).unwrap();
        for g in Generator::ALL {
            assert_eq!(plain.image(g), Representation::reducible_fuchsian().image(g));
        }
    }

    #[test]
    fn reduced_enumeration_counts() {
        let words = reduced_words(&SurfaceGroupPresentation::octagon(), 5);
        let count = |n: usize| words.iter().filter(|w| w.len() == n).count();
        assert_eq!(count(1), 8);
        assert_eq!(count(2), 56);
        assert_eq!(count(4), 8 * 7 * 7 * 7);
        // Only the 16 relator halves of length five are removed.
        assert_eq!(count(5), 8 * 7usize.pow(4) - 16);
    }

    #[test]
    fn scan_of_reducible_family() {
        let rep = Representation::reducible_fuchsian();
        let scan = gap_scan(&rep, 3, 100_000, 1).unwrap();
        assert!(!scan.partial);
        assert_eq!(scan.inverse_symmetry_defect, 0.0);
        assert!((scan.per_length[0].min_lg12 - HALF_LEN).abs() < 1e-9);
        let small = gap_scan(&rep, 3, 10, 1).unwrap();
        assert!(small.partial);
    }

    #[test]
    fn limit_flag_of_generator() {
        let rep = Representation::reducible_fuchsian();
        let w: Word = "a1".parse().unwrap();
        let f = limit_flag_sample(&rep, &w).unwrap();
        let a = octagon_fuchsian()[0];
        let e = a.transpose().try_inverse().unwrap().symmetric_eigen();
        let k = e.eigenvalues.imax();
        let v = e.eigenvectors.column(k);
        let expect = ProjectivePoint::new(v[0], v[1], 0.0).unwrap();
        assert!(f.line.approx_eq(&expect, 1e-10));
    }

    #[test]
    fn conic_position_small() {
        let r = conic_position_check(&Representation::reducible_fuchsian(), 50, 3).unwrap();
        assert_eq!(r.lines_outside, 50);
        assert_eq!(r.planes_meet_interior, 50);
        assert!(conic_position_check(&Representation::irreducible_fuchsian(), 5, 3).is_err());
    }

    #[test]
    fn identical_cones_are_not_nested() {
        let r = flow_nesting_certify(0.3, &[0.0], 16).unwrap();
        assert!(!r.steps[0].nested);
        assert!(flow_nesting_certify(0.3, &[-1.0], 16).is_err());
    }
}
