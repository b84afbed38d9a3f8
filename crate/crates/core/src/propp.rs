//! Finite pro-p presentations at the level needed for index-p subgroup
//! analysis: enumeration of the index-p (normal) subgroups, Schreier
//! rewriting of their presentations, first-homology ranks d(N), the rank
//! formula d(N) = p(d(G) − 2) + 2, and the allowed module shapes of
//! H¹(N, 𝔽ₚ) under the conjugation action of G/N.
//!
//! Words are sequences of (generator, exponent) letters; commutators are
//! expanded eagerly and only adjacent letters of equal generator are
//! merged, which is sufficient for the abelianized ranks computed here.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cp_modules::CpModule;
use crate::error::{Error, Result};
use crate::fp_linalg::{inv_mod, line_representatives, reduce_mod, FpMatrix, Prime, Subspace};
use crate::verdict::Verdict;

/// A word in the presentation's generators: (generator index, exponent)
/// letters with nonzero exponents.
pub type Word = Vec<(usize, i64)>;

/// A minimal pro-p presentation: every relator has exponent-sum vector
/// ≡ 0 mod p, so the generator count equals dim H¹ of the presented group.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProPPresentation {
    p: Prime,
    num_gens: usize,
    relators: Vec<Word>,
}

impl ProPPresentation {
    pub fn new(p: Prime, num_gens: usize, relators: Vec<Word>) -> Result<Self> {
        for (ri, r) in relators.iter().enumerate() {
            for &(g, e) in r {
                if g >= num_gens {
                    return Err(Error::InvalidInput(format!(
                        "relator {ri} uses generator {g}, but there are {num_gens}"
                    )));
                }
                if e == 0 {
                    return Err(Error::InvalidInput(format!(
                        "relator {ri} has a zero-exponent letter"
                    )));
                }
            }
            let sums = exponent_sums(p, num_gens, r);
            if sums.iter().any(|&s| s != 0) {
                return Err(Error::InvariantViolation {
                    context: format!(
                        "relator {ri} is not in the Frattini subgroup (exponent sums {sums:?})"
                    ),
                });
            }
        }
        Ok(ProPPresentation { p, num_gens, relators })
    }

    /// The free pro-p group on `num_gens` generators.
    pub fn free(p: Prime, num_gens: usize) -> Self {
        ProPPresentation { p, num_gens, relators: vec![] }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn num_gens(&self) -> usize {
        self.num_gens
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }
}

fn exponent_sums(p: Prime, num_gens: usize, word: &[(usize, i64)]) -> Vec<u32> {
    let mut sums = vec![0i64; num_gens];
    for &(g, e) in word {
        sums[g] += e;
    }
    sums.into_iter().map(|s| reduce_mod(p, s)).collect()
}

/// The two one-relator families used as known-good inputs.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DemuskinKind {
    /// 2g generators, relator [x₁,x₂]⋯[x_{2g−1},x_{2g}].
    Surface { genus: usize },
    /// 2 generators, relator x₁^q [x₁,x₂]; q a positive power of p, with
    /// q > 2 required when p = 2.
    OneRelatorQ { q: u64 },
}

/// Builds a standard presentation of the requested kind. Minimality is
/// re-checked by the constructor, not assumed.
pub fn demuskin_presentation(p: Prime, kind: DemuskinKind) -> Result<ProPPresentation> {
    match kind {
        DemuskinKind::Surface { genus } => {
            if genus == 0 {
                return Err(Error::InvalidInput("surface kind needs genus ≥ 1".into()));
            }
            let d = 2 * genus;
            let mut r: Word = Vec::with_capacity(4 * genus);
            for i in 0..genus {
                let (a, b) = (2 * i, 2 * i + 1);
                r.extend([(a, 1), (b, 1), (a, -1), (b, -1)]);
            }
            ProPPresentation::new(p, d, vec![r])
        }
        DemuskinKind::OneRelatorQ { q } => {
            let pr = p.get() as u64;
            let mut rest = q;
            while rest > 1 && rest % pr == 0 {
                rest /= pr;
            }
            if q < pr || rest != 1 {
                return Err(Error::InvalidInput(format!(
                    "q = {q} must be a positive power of p = {pr}"
                )));
            }
            if pr == 2 && q == 2 {
                return Err(Error::InvalidInput(
                    "q = 2 is outside the covered parameter range".into(),
                ));
            }
            if q > i64::MAX as u64 {
                return Err(Error::InvalidInput("q is too large".into()));
            }
            let r: Word = vec![(0, q as i64), (0, 1), (1, 1), (0, -1), (1, -1)];
            ProPPresentation::new(p, 2, vec![r])
        }
    }
}

/// An index-p subgroup, named by the induced nonzero map φ: generators →
/// ℤ/p (the subgroup is its kernel); φ is scaled so its first nonzero
/// entry is 1, one representative per hyperplane.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
pub struct IndexPSubgroup {
    pub phi: Vec<u32>,
}

impl IndexPSubgroup {
    pub fn new(p: Prime, phi: &[u32]) -> Result<Self> {
        let reduced: Vec<u32> = phi.iter().map(|&e| e % p.get()).collect();
        let first = reduced
            .iter()
            .position(|&e| e != 0)
            .ok_or_else(|| Error::InvalidInput("phi must be nonzero".into()))?;
        let scale = inv_mod(p, reduced[first]);
        let canonical = reduced
            .iter()
            .map(|&e| (e as u64 * scale as u64 % p.get() as u64) as u32)
            .collect();
        Ok(IndexPSubgroup { phi: canonical })
    }
}

/// All (p^d − 1)/(p − 1) index-p subgroups of a minimal presentation, in
/// canonical order.
pub fn enumerate_index_p(pres: &ProPPresentation) -> Vec<IndexPSubgroup> {
    line_representatives(pres.prime(), pres.num_gens())
        .into_iter()
        .map(|phi| IndexPSubgroup { phi })
        .collect()
}

/// A presentation of an index-p subgroup produced by Schreier rewriting,
/// together with the conjugation action of the chosen transversal
/// generator on the Schreier generators.
#[derive(Clone, Debug)]
pub struct SchreierPresentation {
    p: Prime,
    /// Index of the base generator t whose powers form the transversal.
    t: usize,
    /// (base generator, coset) label per Schreier generator, in order.
    labels: Vec<(usize, usize)>,
    relators: Vec<Word>,
    /// Image of each Schreier generator under conjugation by t, as a word
    /// in the Schreier generators.
    sigma_words: Vec<Word>,
}

impl SchreierPresentation {
    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn transversal_generator(&self) -> usize {
        self.t
    }

    pub fn num_gens(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn sigma_words(&self) -> &[Word] {
        &self.sigma_words
    }

    /// Exponent-sum matrix of the relators (rows) over the Schreier
    /// generators (columns).
    pub fn abelianized_relator_matrix(&self) -> FpMatrix {
        let n = self.num_gens();
        let mut m = FpMatrix::zeros(self.p, self.relators.len(), n);
        for (ri, r) in self.relators.iter().enumerate() {
            let mut sums = vec![0i64; n];
            for &(g, e) in r {
                sums[g] += e;
            }
            for (c, s) in sums.into_iter().enumerate() {
                m.set(ri, c, reduce_mod(self.p, s));
            }
        }
        m
    }
}

struct Rewriter<'a> {
    pres: &'a ProPPresentation,
    phi: &'a [u32],
    inv_phi_t: u32,
    /// Schreier-generator index for (base generator, coset); the p − 1
    /// trivial transversal generators map to None.
    label_of: Vec<Vec<Option<usize>>>,
    labels: Vec<(usize, usize)>,
}

impl<'a> Rewriter<'a> {
    fn new(pres: &'a ProPPresentation, sub: &'a IndexPSubgroup, t: usize) -> Result<Self> {
        if sub.phi.len() != pres.num_gens() {
            return Err(Error::dim(format!(
                "phi length {} vs generator count {}",
                sub.phi.len(),
                pres.num_gens()
            )));
        }
        if t >= pres.num_gens() || sub.phi[t] == 0 {
            return Err(Error::InvalidInput(format!(
                "transversal generator {t} must satisfy phi ≠ 0"
            )));
        }
        let p = pres.prime();
        let pr = p.get() as usize;
        let inv_phi_t = inv_mod(p, sub.phi[t]);
        let mut label_of = vec![vec![None; pr]; pres.num_gens()];
        let mut labels = Vec::new();
        for i in 0..pres.num_gens() {
            for j in 0..pr {
                if i == t && j < pr - 1 {
                    continue; // trivial transversal generator t^j·t·t^{-(j+1)}
                }
                label_of[i][j] = Some(labels.len());
                labels.push((i, j));
            }
        }
        Ok(Rewriter { pres, phi: &sub.phi, inv_phi_t, label_of, labels })
    }

    fn p(&self) -> u32 {
        self.pres.prime().get()
    }

    /// Coset index of the transversal representative t^j covering the
    /// φ-value v.
    fn coset(&self, v: u32) -> usize {
        (v as u64 * self.inv_phi_t as u64 % self.p() as u64) as usize
    }

    /// Rewrites a word lying in the subgroup as a word in the Schreier
    /// generators, scanning unit letters and tracking the current coset.
    fn rewrite(&self, word: &[(usize, i64)]) -> Result<Word> {
        let p = self.p();
        let mut v: u32 = 0;
        let mut out: Word = Vec::new();
        fn emit(gen: usize, sign: i64, out: &mut Word) {
            match out.last_mut() {
                Some((g, e)) if *g == gen => {
                    *e += sign;
                    if *e == 0 {
                        out.pop();
                    }
                }
                _ => out.push((gen, sign)),
            }
        }
        for &(x, exp) in word {
            let steps = exp.unsigned_abs();
            let sign = exp.signum();
            for _ in 0..steps {
                if sign > 0 {
                    let j = self.coset(v);
                    if let Some(idx) = self.label_of[x][j] {
                        emit(idx, 1, &mut out);
                    }
                    v = (v + self.phi[x]) % p;
                } else {
                    let v_next = (v + p - self.phi[x] % p) % p;
                    let j_next = self.coset(v_next);
                    if let Some(idx) = self.label_of[x][j_next] {
                        emit(idx, -1, &mut out);
                    }
                    v = v_next;
                }
            }
        }
        if v != 0 {
            return Err(Error::InvalidInput(
                "word to rewrite does not lie in the subgroup".into(),
            ));
        }
        Ok(out)
    }
}

/// Schreier rewriting with the default transversal: powers of the
/// lowest-index generator with φ ≠ 0.
pub fn reidemeister_schreier(
    pres: &ProPPresentation,
    sub: &IndexPSubgroup,
) -> Result<SchreierPresentation> {
    let t = sub
        .phi
        .iter()
        .position(|&e| e != 0)
        .ok_or_else(|| Error::InvalidInput("phi must be nonzero".into()))?;
    reidemeister_schreier_with_t(pres, sub, t)
}

/// Schreier rewriting with an explicit transversal generator (any t with
/// φ(t) ≠ 0); used to confirm the outputs do not depend on the choice.
pub fn reidemeister_schreier_with_t(
    pres: &ProPPresentation,
    sub: &IndexPSubgroup,
    t: usize,
) -> Result<SchreierPresentation> {
    let rewriter = Rewriter::new(pres, sub, t)?;
    let p = rewriter.p() as usize;

    let mut relators = Vec::with_capacity(p * pres.relators().len());
    for r in pres.relators() {
        for j in 0..p {
            // t^j · r · t^{-j}
            let mut conj: Word = Vec::with_capacity(r.len() + 2);
            if j > 0 {
                conj.push((t, j as i64));
            }
            conj.extend(r.iter().copied());
            if j > 0 {
                conj.push((t, -(j as i64)));
            }
            relators.push(rewriter.rewrite(&conj)?);
        }
    }

    let mut sigma_words = Vec::with_capacity(rewriter.labels.len());
    for &(i, j) in &rewriter.labels {
        // y_{i,j} = t^j · x_i · t^{-j'}; conjugating by t shifts both
        // transversal exponents up by one.
        let pr = rewriter.p() as u64;
        let v_after = ((j as u64 * sub.phi[t] as u64 + sub.phi[i] as u64) % pr) as u32;
        let j_target = rewriter.coset(v_after);
        let mut conj: Word = Vec::new();
        conj.push((t, j as i64 + 1));
        conj.push((i, 1));
        conj.push((t, -(j_target as i64 + 1)));
        sigma_words.push(rewriter.rewrite(&conj)?);
    }

    Ok(SchreierPresentation {
        p: pres.prime(),
        t,
        labels: rewriter.labels,
        relators,
        sigma_words,
    })
}

/// dim Hom(N, ℤ/p) for the rewritten subgroup presentation: generators
/// minus the 𝔽ₚ-rank of the abelianized relator matrix.
pub fn d_of_subgroup(spres: &SchreierPresentation) -> usize {
    spres.num_gens() - spres.abelianized_relator_matrix().rank()
}

/// Witness for a failure of d(N) = p(d(G) − 2) + 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankFormulaViolation {
    pub phi: Vec<u32>,
    pub d_n: usize,
    pub expected: i64,
}

/// Checks d(N) = p(d(G) − 2) + 2 over every index-p subgroup.
pub fn verify_rank_formula(pres: &ProPPresentation) -> Result<Verdict<RankFormulaViolation>> {
    let p = pres.prime().get() as i64;
    let d = pres.num_gens() as i64;
    let expected = p * (d - 2) + 2;
    for sub in enumerate_index_p(pres) {
        let spres = reidemeister_schreier(pres, &sub)?;
        let d_n = d_of_subgroup(&spres);
        if d_n as i64 != expected {
            return Ok(Verdict::Refuted(RankFormulaViolation { phi: sub.phi, d_n, expected }));
        }
    }
    Ok(Verdict::Verified)
}

/// The conjugation action of the transversal generator on N^{ab} ⊗ 𝔽ₚ:
/// the quotient of the Schreier-generator span by the abelianized
/// relators, with σ acting through the recorded conjugation words. The
/// module dimension is d(N); the action satisfies σᵖ = identity because
/// t^p lies in N and conjugation by it is inner.
pub fn h1_module(pres: &ProPPresentation, sub: &IndexPSubgroup) -> Result<CpModule> {
    let spres = reidemeister_schreier(pres, sub)?;
    let p = spres.prime();
    let n = spres.num_gens();

    // abelianized σ on the free span of the Schreier generators
    let mut s = FpMatrix::zeros(p, n, n);
    for (k, w) in spres.sigma_words().iter().enumerate() {
        let mut sums = vec![0i64; n];
        for &(g, e) in w {
            sums[g] += e;
        }
        for (r, sum) in sums.into_iter().enumerate() {
            s.set(r, k, reduce_mod(p, sum));
        }
    }

    let relator_space = spres.abelianized_relator_matrix().row_space();
    let complement = relator_space.complement_in(&Subspace::full(p, n))?;
    let dim = complement.dim();

    // basis (relator space ++ complement); σ̄ reads off complement coords
    let mut basis_cols: Vec<Vec<u32>> = relator_space.basis().to_vec();
    basis_cols.extend(complement.basis().to_vec());
    let basis = FpMatrix::from_columns(p, n, &basis_cols)?;
    let r_dim = relator_space.dim();
    let mut sigma_bar = FpMatrix::zeros(p, dim, dim);
    for (col, c) in complement.basis().iter().enumerate() {
        let image = s.mul_vec(c)?;
        let coords = basis.solve(&image)?.ok_or_else(|| Error::InvariantViolation {
            context: "abelianized conjugation does not preserve the relator span".into(),
        })?;
        for row in 0..dim {
            sigma_bar.set(row, col, coords[r_dim + row]);
        }
    }
    CpModule::new(p, sigma_bar)
}

/// Witness for an H¹ module shape outside the allowed list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShapeViolation {
    pub phi: Vec<u32>,
    pub observed: Vec<usize>,
    pub allowed: Vec<Vec<usize>>,
}

/// The allowed ascending Jordan types of H¹(N,𝔽ₚ) for an n-generator
/// group satisfying the rank formula: a two-dimensional part that is
/// either trivial ([1,1]) or a single 2-block ([2]), plus n−2 free blocks
/// (for p = 2 the [2] case merges with the free blocks into [2]^{n−1}).
pub fn allowed_h1_shapes(p: Prime, n: usize) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "shape test needs at least 2 generators, got {n}"
        )));
    }
    let pr = p.get() as usize;
    let mut trivial_x = vec![1usize, 1];
    trivial_x.extend(std::iter::repeat(pr).take(n - 2));
    let mut cyclic_x = vec![2usize];
    cyclic_x.extend(std::iter::repeat(pr).take(n - 2));
    Ok(vec![trivial_x, cyclic_x])
}

/// Checks that the H¹ module of the given subgroup has one of the two
/// allowed shapes; reports the observed Jordan type either way.
pub fn verify_theorem4_shape(
    pres: &ProPPresentation,
    sub: &IndexPSubgroup,
) -> Result<Verdict<ShapeViolation>> {
    let allowed = allowed_h1_shapes(pres.prime(), pres.num_gens())?;
    let observed = h1_module(pres, sub)?.jordan_type();
    if allowed.contains(&observed) {
        Ok(Verdict::Verified)
    } else {
        Ok(Verdict::Refuted(ShapeViolation { phi: sub.phi.clone(), observed, allowed }))
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawPresentation {
    p: u32,
    gens: usize,
    relators: Vec<Vec<[i64; 2]>>,
}

impl Serialize for ProPPresentation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawPresentation {
            p: self.p.get(),
            gens: self.num_gens,
            relators: self
                .relators
                .iter()
                .map(|r| r.iter().map(|&(g, e)| [g as i64 + 1, e]).collect())
                .collect(),
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProPPresentation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPresentation::deserialize(d)?;
        let p = Prime::new(raw.p).map_err(|e| D::Error::custom(e.to_string()))?;
        let mut relators = Vec::with_capacity(raw.relators.len());
        for (ri, r) in raw.relators.iter().enumerate() {
            let mut word: Word = Vec::with_capacity(r.len());
            for &[g, e] in r {
                if g < 1 || g as usize > raw.gens {
                    return Err(D::Error::custom(format!(
                        "relator {ri}: generator {g} out of range 1..={}",
                        raw.gens
                    )));
                }
                word.push((g as usize - 1, e));
            }
            relators.push(word);
        }
        ProPPresentation::new(p, raw.gens, relators).map_err(|e| D::Error::custom(e.to_string()))
    }
}
