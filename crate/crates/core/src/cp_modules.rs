//! Finite modules over 𝔽ₚ[C] for C cyclic of order p, presented by one
//! generator σ of the acting group: Jordan-type analysis of σ−1, freeness
//! and triviality tests, maximal free summands, and the
//! fixed-points-meet-augmentation identity that characterizes
//! trivial ⊕ free modules.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fp_linalg::{nilpotent_jordan_type, FpMatrix, Prime, Subspace};

/// A finite 𝔽ₚ-space with an action of a cyclic group of order p given by
/// the matrix of a fixed generator σ; validated to satisfy σᵖ = identity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CpModule {
    p: Prime,
    dim: usize,
    sigma: FpMatrix,
}

impl CpModule {
    pub fn new(p: Prime, sigma: FpMatrix) -> Result<Self> {
        p.same_as(sigma.prime())?;
        if !sigma.is_square() {
            return Err(Error::dim(format!(
                "sigma must be square, got {}x{}",
                sigma.rows(),
                sigma.cols()
            )));
        }
        let dim = sigma.rows();
        let identity = FpMatrix::identity(p, dim);
        if sigma.pow(p.get())? != identity {
            return Err(Error::InvariantViolation {
                context: "sigma^p must be the identity".into(),
            });
        }
        Ok(CpModule { p, dim, sigma })
    }

    /// The module with σ = identity on `dim` coordinates.
    pub fn trivial(p: Prime, dim: usize) -> Self {
        CpModule { p, dim, sigma: FpMatrix::identity(p, dim) }
    }

    /// Direct sum of unipotent Jordan blocks of the given sizes (each
    /// between 1 and p). Block basis b₀..b_{k−1} with σbᵢ = bᵢ + b_{i+1}
    /// (and σ fixing the last vector), so σ−1 shifts down the block.
    pub fn from_jordan_type(p: Prime, parts: &[usize]) -> Result<Self> {
        let pr = p.get() as usize;
        if parts.iter().any(|&k| k == 0 || k > pr) {
            return Err(Error::InvalidInput(format!(
                "jordan parts must lie in 1..={pr}, got {parts:?}"
            )));
        }
        let dim: usize = parts.iter().sum();
        let mut sigma = FpMatrix::identity(p, dim);
        let mut offset = 0;
        for &k in parts {
            for i in 0..k - 1 {
                // σ b_{offset+i} = b_{offset+i} + b_{offset+i+1}
                sigma.set(offset + i + 1, offset + i, 1);
            }
            offset += k;
        }
        Ok(CpModule { p, dim, sigma })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> &FpMatrix {
        &self.sigma
    }

    /// σ − 1 as a matrix (nilpotent by the σᵖ = 1 invariant).
    pub fn sigma_minus_one(&self) -> FpMatrix {
        self.sigma
            .sub(&FpMatrix::identity(self.p, self.dim))
            .expect("same shape")
    }

    /// (σ−1)^{p−1}, the matrix of the norm element 1 + σ + … + σ^{p−1}.
    pub fn trace_matrix(&self) -> FpMatrix {
        self.sigma_minus_one().pow(self.p.get() - 1).expect("square")
    }

    /// Ascending Jordan type of σ−1; parts lie in 1..=p.
    pub fn jordan_type(&self) -> Vec<usize> {
        nilpotent_jordan_type(&self.sigma_minus_one())
            .expect("sigma^p = 1 forces nilpotency of sigma - 1")
    }

    /// Fixed submodule ker(σ−1).
    pub fn fixed_submodule(&self) -> Subspace {
        self.sigma_minus_one().kernel_basis()
    }

    /// Image of (σ−1)^{p−1}; equals the image of the norm element.
    pub fn trace_image(&self) -> Subspace {
        self.trace_matrix().column_space()
    }

    /// Freeness over 𝔽ₚ[C]: the fixed submodule coincides with the trace
    /// image; equivalently every Jordan part equals p. Both routes are
    /// computed and must agree.
    pub fn is_free(&self) -> bool {
        let by_subspaces = self.fixed_submodule() == self.trace_image();
        let p = self.p.get() as usize;
        let by_type = self.jordan_type().iter().all(|&k| k == p);
        assert_eq!(by_subspaces, by_type, "freeness criteria must agree");
        by_type
    }

    /// σ acts as the identity.
    pub fn is_trivial(&self) -> bool {
        self.sigma == FpMatrix::identity(self.p, self.dim)
    }

    /// Decomposes as (trivial) ⊕ (free): every Jordan part is 1 or p.
    pub fn is_trivial_plus_free(&self) -> bool {
        let p = self.p.get() as usize;
        self.jordan_type().iter().all(|&k| k == 1 || k == p)
    }

    /// Some Jordan part equals p.
    pub fn has_free_summand(&self) -> bool {
        let p = self.p.get() as usize;
        self.jordan_type().iter().any(|&k| k == p)
    }

    /// The cyclic submodule generated by v when its norm (σ−1)^{p−1}v is
    /// nonzero; always free of dimension exactly p and σ-invariant.
    pub fn free_cyclic_span(&self, v: &[u32]) -> Result<Subspace> {
        if v.len() != self.dim {
            return Err(Error::dim(format!(
                "vector length {} vs module dimension {}",
                v.len(),
                self.dim
            )));
        }
        let p = self.p.get() as usize;
        let s = self.sigma_minus_one();
        let mut iterates = vec![v.to_vec()];
        for _ in 1..p {
            let next = s.mul_vec(iterates.last().unwrap())?;
            iterates.push(next);
        }
        if iterates.last().unwrap().iter().all(|&e| e == 0) {
            return Err(Error::InvalidInput(
                "free cyclic span needs (sigma-1)^{p-1} v != 0".into(),
            ));
        }
        let span = Subspace::from_spanning(self.p, self.dim, &iterates);
        assert_eq!(span.dim(), p, "cyclic span with nonzero norm is p-dimensional");
        for b in span.basis() {
            assert!(
                span.contains(&self.sigma.mul_vec(b).expect("length")),
                "cyclic span must be sigma-invariant"
            );
        }
        Ok(span)
    }

    /// A maximal free submodule, built greedily: scan the canonical basis
    /// and keep each vector whose norm is independent of the norms kept so
    /// far, summing their free cyclic spans. Norms of the canonical basis
    /// span the whole trace image, so the result has rank equal to the
    /// number of Jordan parts of size p and shares its trace image with M.
    pub fn maximal_free_submodule(&self) -> FreeSummand {
        let trace = self.trace_matrix();
        let mut kept_norms: Vec<Vec<u32>> = Vec::new();
        let mut generators: Vec<Vec<u32>> = Vec::new();
        let mut space = Subspace::zero(self.p, self.dim);
        for i in 0..self.dim {
            let mut v = vec![0u32; self.dim];
            v[i] = 1;
            let norm = trace.mul_vec(&v).expect("length");
            if norm.iter().all(|&e| e == 0) {
                continue;
            }
            let span_so_far = Subspace::from_spanning(self.p, self.dim, &kept_norms);
            if span_so_far.contains(&norm) {
                continue;
            }
            let block = self.free_cyclic_span(&v).expect("norm is nonzero");
            space = space.sum(&block).expect("same ambient");
            kept_norms.push(norm);
            generators.push(v);
        }
        FreeSummand { generators, space }
    }

    /// Restricts the action to a σ-invariant subspace, returning the module
    /// structure in the subspace's canonical basis coordinates.
    pub fn restrict_to(&self, sub: &Subspace) -> Result<CpModule> {
        self.p.same_as(sub.prime())?;
        if sub.ambient_dim() != self.dim {
            return Err(Error::dim(format!(
                "subspace ambient {} vs module dimension {}",
                sub.ambient_dim(),
                self.dim
            )));
        }
        let basis = sub.basis_matrix();
        let k = sub.dim();
        let mut small = FpMatrix::zeros(self.p, k, k);
        for (j, b) in sub.basis().iter().enumerate() {
            let image = self.sigma.mul_vec(b)?;
            let coords = basis.transpose().solve(&image)?.ok_or_else(|| {
                Error::NotSubspace { context: "subspace is not sigma-invariant".into() }
            })?;
            for (i, &c) in coords.iter().enumerate() {
                small.set(i, j, c);
            }
        }
        CpModule::new(self.p, small)
    }

    /// The identity fixed ∩ (σ−1)M = (σ−1)^{p−1}M, which holds exactly for
    /// trivial ⊕ free modules.
    pub fn check_fixednorm_identity(&self) -> bool {
        let lhs = self
            .fixed_submodule()
            .intersect(&self.sigma_minus_one().column_space())
            .expect("same ambient");
        lhs == self.trace_image()
    }

    /// Transports the action along an invertible change of basis g,
    /// returning the module with generator g·σ·g⁻¹.
    pub fn conjugate(&self, g: &FpMatrix) -> Result<CpModule> {
        self.p.same_as(g.prime())?;
        if g.rows() != self.dim || g.cols() != self.dim {
            return Err(Error::dim("conjugating map has wrong shape"));
        }
        let sigma = g.mul(&self.sigma)?.mul(&g.inverse()?)?;
        CpModule::new(self.p, sigma)
    }
}

/// A maximal free submodule together with the block generators chosen for
/// it; `rank()` equals the number of Jordan parts of size p.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreeSummand {
    pub generators: Vec<Vec<u32>>,
    pub space: Subspace,
}

impl FreeSummand {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawCpModule {
    p: u32,
    dim: usize,
    sigma: Vec<Vec<i64>>,
}

impl Serialize for CpModule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawCpModule {
            p: self.p.get(),
            dim: self.dim,
            sigma: self
                .sigma
                .row_vectors()
                .into_iter()
                .map(|row| row.into_iter().map(|e| e as i64).collect())
                .collect(),
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CpModule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawCpModule::deserialize(d)?;
        let p = Prime::new(raw.p).map_err(|e| D::Error::custom(e.to_string()))?;
        if raw.sigma.len() != raw.dim {
            return Err(D::Error::custom(format!(
                "sigma has {} rows but dim is {}",
                raw.sigma.len(),
                raw.dim
            )));
        }
        let sigma = FpMatrix::from_rows(p, &raw.sigma).map_err(|e| D::Error::custom(e.to_string()))?;
        if sigma.cols() != raw.dim && raw.dim != 0 {
            return Err(D::Error::custom(format!(
                "sigma has {} columns but dim is {}",
                sigma.cols(),
                raw.dim
            )));
        }
        CpModule::new(p, sigma).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(v: u32) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn constructor_rejects_non_unipotent_actions() {
        let sigma = FpMatrix::from_rows(p(3), &[vec![2]]).unwrap();
        assert!(matches!(
            CpModule::new(p(3), sigma),
            Err(Error::InvariantViolation { .. })
        ));
        // An order-3 element of GL₂(F₂) violates σ² = 1.
        let sigma = FpMatrix::from_rows(p(2), &[vec![0, 1], vec![1, 1]]).unwrap();
        assert!(CpModule::new(p(2), sigma).is_err());
    }

    #[test]
    fn jordan_type_examples() {
        assert_eq!(CpModule::trivial(p(5), 4).jordan_type(), vec![1, 1, 1, 1]);
        let free = CpModule::from_jordan_type(p(3), &[3]).unwrap();
        assert_eq!(free.jordan_type(), vec![3]);
        let mixed = CpModule::from_jordan_type(p(3), &[1, 1, 3]).unwrap();
        assert_eq!(mixed.jordan_type(), vec![1, 1, 3]);
        assert!(CpModule::from_jordan_type(p(3), &[4]).is_err());
        assert!(CpModule::from_jordan_type(p(3), &[0]).is_err());
    }

    #[test]
    fn fixed_submodule_examples() {
        let trivial = CpModule::trivial(p(3), 2);
        assert_eq!(trivial.fixed_submodule(), Subspace::full(p(3), 2));
        let free = CpModule::from_jordan_type(p(3), &[3]).unwrap();
        let fixed = free.fixed_submodule();
        assert_eq!(fixed.dim(), 1);
        assert!(fixed.contains(&[0, 0, 1])); // bottom of the block
        assert_eq!(CpModule::trivial(p(3), 0).fixed_submodule().dim(), 0);
    }

    #[test]
    fn trace_image_examples() {
        assert_eq!(CpModule::trivial(p(3), 2).trace_image().dim(), 0);
        let free = CpModule::from_jordan_type(p(3), &[3]).unwrap();
        assert_eq!(free.trace_image().dim(), 1);
        let mixed = CpModule::from_jordan_type(p(3), &[1, 3]).unwrap();
        let t = mixed.trace_image();
        assert_eq!(t.dim(), 1);
        assert!(t.contains(&[0, 0, 0, 1]));
    }

    #[test]
    fn freeness_examples() {
        assert!(CpModule::trivial(p(3), 0).is_free());
        assert!(!CpModule::trivial(p(3), 1).is_free());
        assert!(CpModule::from_jordan_type(p(3), &[3, 3]).unwrap().is_free());
        assert!(CpModule::from_jordan_type(p(2), &[2, 2]).unwrap().is_free());
        assert!(!CpModule::from_jordan_type(p(3), &[1, 3]).unwrap().is_free());
    }

    #[test]
    fn trivial_plus_free_and_summand_examples() {
        let m113 = CpModule::from_jordan_type(p(3), &[1, 1, 3]).unwrap();
        assert!(m113.is_trivial_plus_free());
        assert!(m113.has_free_summand());
        let m2 = CpModule::from_jordan_type(p(3), &[2]).unwrap();
        assert!(!m2.is_trivial_plus_free());
        assert!(!m2.has_free_summand());
        let m11 = CpModule::from_jordan_type(p(5), &[1, 1]).unwrap();
        assert!(m11.is_trivial_plus_free());
        assert!(!m11.has_free_summand());
        // Over F2 every part is 1 or 2, so trivial ⊕ free always holds.
        for parts in [vec![1usize], vec![2], vec![1, 2], vec![2, 2, 1]] {
            let m = CpModule::from_jordan_type(p(2), &parts).unwrap();
            assert!(m.is_trivial_plus_free());
        }
    }

    #[test]
    fn free_cyclic_span_examples() {
        let free = CpModule::from_jordan_type(p(3), &[3]).unwrap();
        let span = free.free_cyclic_span(&[1, 0, 0]).unwrap();
        assert_eq!(span, Subspace::full(p(3), 3));
        // fixed vectors have vanishing norm
        assert!(free.free_cyclic_span(&[0, 0, 1]).is_err());
        let mixed = CpModule::from_jordan_type(p(3), &[1, 3]).unwrap();
        let span = mixed.free_cyclic_span(&[1, 1, 0, 0]).unwrap();
        assert_eq!(span.dim(), 3);
    }

    #[test]
    fn maximal_free_submodule_examples() {
        let trivial = CpModule::trivial(p(3), 2);
        assert_eq!(trivial.maximal_free_submodule().rank(), 0);
        let free = CpModule::from_jordan_type(p(3), &[3]).unwrap();
        let f = free.maximal_free_submodule();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.space, Subspace::full(p(3), 3));
        let mixed = CpModule::from_jordan_type(p(3), &[1, 3]).unwrap();
        let f = mixed.maximal_free_submodule();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.space.dim(), 3);
        let restricted = mixed.restrict_to(&f.space).unwrap();
        assert!(restricted.is_free());
        // the summand's trace image is the whole module's
        let trace_of_summand = Subspace::from_spanning(
            p(3),
            4,
            &f.generators
                .iter()
                .map(|g| mixed.trace_matrix().mul_vec(g).unwrap())
                .collect::<Vec<_>>(),
        );
        assert_eq!(trace_of_summand, mixed.trace_image());
    }

    #[test]
    fn restrict_rejects_non_invariant_subspaces() {
        let free = CpModule::from_jordan_type(p(3), &[3]).unwrap();
        let line = Subspace::from_spanning(p(3), 3, &[vec![1, 0, 0]]);
        assert!(free.restrict_to(&line).is_err());
    }

    #[test]
    fn fixednorm_identity_examples() {
        // p = 2: always true.
        for parts in [vec![1usize], vec![2], vec![1, 2], vec![2, 2, 1, 1]] {
            let m = CpModule::from_jordan_type(p(2), &parts).unwrap();
            assert!(m.check_fixednorm_identity());
        }
        let m2 = CpModule::from_jordan_type(p(3), &[2]).unwrap();
        assert!(!m2.check_fixednorm_identity());
        let m13 = CpModule::from_jordan_type(p(3), &[1, 3]).unwrap();
        assert!(m13.check_fixednorm_identity());
    }

    #[test]
    fn jordan_structure_invariants() {
        for parts in [vec![1usize, 1, 3], vec![2, 3], vec![3, 3], vec![1, 2, 2]] {
            let m = CpModule::from_jordan_type(p(3), &parts).unwrap();
            let jt = m.jordan_type();
            assert_eq!(jt.iter().sum::<usize>(), m.dim());
            assert_eq!(jt.len(), m.fixed_submodule().dim());
        }
    }

    #[test]
    fn conjugation_preserves_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for parts in [vec![1usize, 3], vec![2, 2], vec![1, 1, 2]] {
            let m = CpModule::from_jordan_type(p(3), &parts).unwrap();
            for _ in 0..20 {
                let g = FpMatrix::random_invertible(p(3), m.dim(), &mut rng);
                let c = m.conjugate(&g).unwrap();
                assert_eq!(c.jordan_type(), m.jordan_type());
                assert_eq!(c.is_free(), m.is_free());
                assert_eq!(c.is_trivial_plus_free(), m.is_trivial_plus_free());
                assert_eq!(c.has_free_summand(), m.has_free_summand());
                assert_eq!(c.check_fixednorm_identity(), m.check_fixednorm_identity());
                assert_eq!(c.maximal_free_submodule().rank(), m.maximal_free_submodule().rank());
            }
        }
    }

    #[test]
    fn transpose_action_has_same_jordan_type() {
        // The dual module corresponds to the transposed action; for cyclic
        // p-groups the Jordan type is unchanged.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for parts in [vec![2usize], vec![1, 3], vec![2, 3]] {
            let m = CpModule::from_jordan_type(p(3), &parts).unwrap();
            let g = FpMatrix::random_invertible(p(3), m.dim(), &mut rng);
            let c = m.conjugate(&g).unwrap();
            let dual = CpModule::new(p(3), c.sigma().transpose()).unwrap();
            assert_eq!(dual.jordan_type(), c.jordan_type());
        }
    }

    #[test]
    fn module_json_round_trip() {
        let m = CpModule::from_jordan_type(p(3), &[1, 3]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: CpModule = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
        assert!(text.starts_with(r#"{"p":3,"dim":4,"sigma":["#));
        // rejections: bad dimension and broken invariant
        assert!(serde_json::from_str::<CpModule>(r#"{"p":3,"dim":2,"sigma":[[1]]}"#).is_err());
        assert!(serde_json::from_str::<CpModule>(r#"{"p":3,"dim":1,"sigma":[[2]]}"#).is_err());
    }
}
