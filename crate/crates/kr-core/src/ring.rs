//! Graded multivariate polynomials over an exact field, the three potentials,
//! their divided-difference quotients, and normal forms modulo relation sets.
//!
//! Grading: every x-variable has degree 2; the equivariant deformation
//! parameter `a` has degree 2N.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::field::Field;

/// The three potentials of the theory.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Variant {
    /// w(x) = x^{N+1}
    Generic,
    /// w(x) = x^{N+1} - a x
    Equivariant,
    /// w(x) = x^{N+1} - x
    Deformed,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Generic => "generic",
            Variant::Equivariant => "equivariant",
            Variant::Deformed => "deformed",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "generic" => Some(Variant::Generic),
            "equivariant" => Some(Variant::Equivariant),
            "deformed" => Some(Variant::Deformed),
            _ => None,
        }
    }

    /// Only the deformed potential is merely filtered.
    pub fn is_graded(self) -> bool {
        !matches!(self, Variant::Deformed)
    }
}

/// Potential choice: N >= 2 plus the variant.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PotentialSpec {
    pub n: u32,
    pub variant: Variant,
}

impl PotentialSpec {
    pub fn new(n: u32, variant: Variant) -> Result<Self, String> {
        if n < 2 {
            return Err(format!("invalid potential: N = {n} < 2"));
        }
        Ok(PotentialSpec { n, variant })
    }

    pub fn uses_a(&self) -> bool {
        self.variant == Variant::Equivariant
    }
}

/// A polynomial ring context: named variables with their q-degrees.
///
/// Variable 0 is `a` (degree 2N) in equivariant rings; x-variables have
/// degree 2. The monomial order used throughout is graded lex with
/// a > x-vars in index order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RingCtx {
    pub names: Vec<String>,
    pub degs: Vec<i64>,
    pub a_idx: Option<usize>,
}

impl RingCtx {
    pub fn new(spec: PotentialSpec, xvars: &[&str]) -> Arc<RingCtx> {
        let mut names = Vec::new();
        let mut degs = Vec::new();
        let a_idx = if spec.uses_a() {
            names.push("a".to_string());
            degs.push(2 * spec.n as i64);
            Some(0)
        } else {
            None
        };
        for v in xvars {
            names.push(v.to_string());
            degs.push(2);
        }
        Arc::new(RingCtx { names, degs, a_idx })
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Ring with the named variable removed.
    pub fn without(&self, idx: usize) -> Arc<RingCtx> {
        let mut names = self.names.clone();
        let mut degs = self.degs.clone();
        names.remove(idx);
        degs.remove(idx);
        let a_idx = self.a_idx.map(|a| {
            assert_ne!(a, idx, "cannot exclude the deformation parameter");
            if a > idx { a - 1 } else { a }
        });
        Arc::new(RingCtx { names, degs, a_idx })
    }
}

/// Exponent vector; its length always equals the ring's variable count.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Mono(pub Vec<u16>);

impl Mono {
    pub fn one(nvars: usize) -> Mono {
        Mono(vec![0; nvars])
    }

    pub fn var(nvars: usize, idx: usize) -> Mono {
        let mut m = Mono::one(nvars);
        m.0[idx] = 1;
        m
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn div(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn degree(&self, ring: &RingCtx) -> i64 {
        self.0.iter().zip(&ring.degs).map(|(e, d)| *e as i64 * d).sum()
    }

    /// Graded lex with variable 0 highest.
    pub fn grlex_cmp(&self, other: &Mono, ring: &RingCtx) -> std::cmp::Ordering {
        self.degree(ring)
            .cmp(&other.degree(ring))
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Sparse polynomial over `F` in a fixed ring context.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly<F: Field> {
    pub ring: Arc<RingCtx>,
    pub terms: BTreeMap<Mono, F>,
}

impl<F: Field> Poly<F> {
    pub fn zero(ring: &Arc<RingCtx>) -> Self {
        Poly { ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(ring: &Arc<RingCtx>, c: F) -> Self {
        let mut p = Self::zero(ring);
        if !c.is_zero() {
            p.terms.insert(Mono::one(ring.nvars()), c);
        }
        p
    }

    pub fn one(ring: &Arc<RingCtx>) -> Self {
        Self::constant(ring, F::one())
    }

    pub fn int(ring: &Arc<RingCtx>, n: i64) -> Self {
        Self::constant(ring, F::from_i64(n))
    }

    pub fn var(ring: &Arc<RingCtx>, idx: usize) -> Self {
        let mut p = Self::zero(ring);
        p.terms.insert(Mono::var(ring.nvars(), idx), F::one());
        p
    }

    pub fn var_named(ring: &Arc<RingCtx>, name: &str) -> Self {
        Self::var(ring, ring.var_index(name).expect("unknown variable"))
    }

    pub fn monomial(ring: &Arc<RingCtx>, m: Mono, c: F) -> Self {
        let mut p = Self::zero(ring);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Mono, c: F) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Poly {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        Poly {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(m, x)| (m.clone(), x.mul(c))).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(&self.ring);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1.mul(c2));
            }
        }
        out
    }

    pub fn mul_mono(&self, m: &Mono, c: &F) -> Self {
        let mut out = Self::zero(&self.ring);
        for (m1, c1) in &self.terms {
            out.add_term(m1.mul(m), c1.mul(c));
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(&self.ring);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// q-degree when homogeneous.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let mut deg = None;
        for m in self.terms.keys() {
            let d = m.degree(&self.ring);
            match deg {
                None => deg = Some(d),
                Some(e) if e != d => return None,
                _ => {}
            }
        }
        deg
    }

    pub fn max_degree(&self) -> i64 {
        self.terms.keys().map(|m| m.degree(&self.ring)).max().unwrap_or(0)
    }

    /// Substitute each variable by the given image (all in the target ring).
    pub fn map_vars(&self, target: &Arc<RingCtx>, images: &[Poly<F>]) -> Poly<F> {
        assert_eq!(images.len(), self.ring.nvars());
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (i, e) in m.0.iter().enumerate() {
                if *e > 0 {
                    t = t.mul(&images[i].pow(*e as u32));
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Substitute one variable keeping the ring.
    pub fn subst(&self, idx: usize, image: &Poly<F>) -> Poly<F> {
        let images: Vec<Poly<F>> = (0..self.ring.nvars())
            .map(|i| if i == idx { image.clone() } else { Poly::var(&self.ring, i) })
            .collect();
        self.map_vars(&self.ring, &images)
    }

    /// Leading term under grlex.
    pub fn lead(&self) -> Option<(&Mono, &F)> {
        self.terms
            .iter()
            .max_by(|(m1, _), (m2, _)| m1.grlex_cmp(m2, &self.ring))
    }

    /// Exact division by (x_i - x_j); panics if not divisible.
    pub fn div_exact_by_var_difference(&self, i: usize, j: usize) -> Poly<F> {
        assert_ne!(i, j);
        // p = Σ_k c_k(rest) x_i^k with x_i |-> x_j annihilating p gives
        // p / (x_i - x_j) = Σ_k c_k Σ_{a+b=k-1} x_i^a x_j^b.
        let at_eq = self.subst(i, &Poly::var(&self.ring, j));
        assert!(at_eq.is_zero(), "polynomial not divisible by variable difference");
        let mut out = Poly::zero(&self.ring);
        for (m, c) in &self.terms {
            let k = m.0[i];
            if k == 0 {
                continue;
            }
            let mut base = m.clone();
            base.0[i] = 0;
            for aexp in 0..k {
                let bexp = k - 1 - aexp;
                let mut mm = base.clone();
                mm.0[i] += aexp;
                mm.0[j] += bexp;
                out.add_term(mm, c.clone());
            }
        }
        // terms of self with x_i-degree 0 cancel against the substituted part;
        // verify by re-expansion in debug builds.
        debug_assert!({
            let xi = Poly::var(&self.ring, i);
            let xj = Poly::var(&self.ring, j);
            out.mul(&xi.sub(&xj)) == *self
        });
        out
    }
}

impl<F: Field> fmt::Display for Poly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c)?;
            for (i, e) in m.0.iter().enumerate() {
                if *e == 1 {
                    write!(f, "*{}", self.ring.names[i])?;
                } else if *e > 1 {
                    write!(f, "*{}^{}", self.ring.names[i], e)?;
                }
            }
        }
        Ok(())
    }
}

/// w(x) in the named variable.
pub fn potential<F: Field>(
    spec: PotentialSpec,
    ring: &Arc<RingCtx>,
    var: &str,
) -> Poly<F> {
    let x = Poly::var_named(ring, var);
    let xn1 = x.pow(spec.n + 1);
    match spec.variant {
        Variant::Generic => xn1,
        Variant::Equivariant => {
            let a = Poly::var(ring, ring.a_idx.expect("equivariant ring has no a"));
            xn1.sub(&a.mul(&x))
        }
        Variant::Deformed => xn1.sub(&x),
    }
}

/// (w(x_i) - w(x_j)) / (x_i - x_j).
pub fn pi_quotient<F: Field>(
    spec: PotentialSpec,
    ring: &Arc<RingCtx>,
    xi: &str,
    xj: &str,
) -> Poly<F> {
    assert_ne!(xi, xj, "pi_quotient needs distinct variables");
    let i = ring.var_index(xi).expect("unknown variable");
    let j = ring.var_index(xj).expect("unknown variable");
    let wi: Poly<F> = potential(spec, ring, xi);
    let wj: Poly<F> = potential(spec, ring, xj);
    wi.sub(&wj).div_exact_by_var_difference(i, j)
}

/// The two-variable symmetrization g with w(x) + w(y) = g(x+y, xy),
/// returned as a polynomial in an internal ring [a?, s, t].
pub fn g_polynomial<F: Field>(spec: PotentialSpec) -> Poly<F> {
    let ring = RingCtx::new(spec, &["s", "t"]);
    let s = Poly::var_named(&ring, "s");
    let t = Poly::var_named(&ring, "t");
    // power sums p_k(x, y) = x^k + y^k as polynomials in (s, t):
    // p_0 = 2, p_1 = s, p_k = s p_{k-1} - t p_{k-2}.
    let mut p_prev = Poly::int(&ring, 2);
    let mut p_cur = s.clone();
    for _ in 2..=(spec.n + 1) {
        let next = s.mul(&p_cur).sub(&t.mul(&p_prev));
        p_prev = p_cur;
        p_cur = next;
    }
    match spec.variant {
        Variant::Generic => p_cur,
        Variant::Equivariant => {
            let a = Poly::var(&ring, ring.a_idx.unwrap());
            p_cur.sub(&a.mul(&s))
        }
        Variant::Deformed => p_cur.sub(&s),
    }
}

/// u_{ijkl}, v_{ijkl}: the polynomials with
/// u·(x_i + x_j - x_k - x_l) + v·(x_i x_j - x_k x_l)
///   = g(x_i+x_j, x_i x_j) - g(x_k+x_l, x_k x_l).
pub fn uv_quotients<F: Field>(
    spec: PotentialSpec,
    ring: &Arc<RingCtx>,
    xi: &str,
    xj: &str,
    xk: &str,
    xl: &str,
) -> (Poly<F>, Poly<F>) {
    let g = g_polynomial::<F>(spec);
    let s1 = Poly::var_named(ring, xi).add(&Poly::var_named(ring, xj));
    let s2 = Poly::var_named(ring, xk).add(&Poly::var_named(ring, xl));
    let t1 = Poly::var_named(ring, xi).mul(&Poly::var_named(ring, xj));
    let t2 = Poly::var_named(ring, xk).mul(&Poly::var_named(ring, xl));

    let gring = g.ring.clone();
    let s_idx = gring.var_index("s").unwrap();
    let t_idx = gring.var_index("t").unwrap();

    // u = Σ_terms c a^α t1^e Σ_{p+q=d-1} s1^p s2^q   (difference in s at fixed t = t1)
    // v = Σ_terms c a^α s2^d Σ_{p+q=e-1} t1^p t2^q   (difference in t at s = s2)
    let mut u = Poly::zero(ring);
    let mut v = Poly::zero(ring);
    for (m, c) in &g.terms {
        let d = m.0[s_idx];
        let e = m.0[t_idx];
        let apart = match (gring.a_idx, ring.a_idx) {
            (Some(ga), Some(ra)) => {
                Poly::monomial(ring, {
                    let mut mm = Mono::one(ring.nvars());
                    mm.0[ra] = m.0[ga];
                    mm
                }, F::one())
            }
            _ => Poly::one(ring),
        };
        if d > 0 {
            let mut dd = Poly::zero(ring);
            for p in 0..d {
                dd = dd.add(&s1.pow(p as u32).mul(&s2.pow((d - 1 - p) as u32)));
            }
            u = u.add(&apart.mul(&Poly::constant(ring, c.clone())).mul(&t1.pow(e as u32)).mul(&dd));
        }
        if e > 0 {
            let mut ee = Poly::zero(ring);
            for p in 0..e {
                ee = ee.add(&t1.pow(p as u32).mul(&t2.pow((e - 1 - p) as u32)));
            }
            v = v.add(&apart.mul(&Poly::constant(ring, c.clone())).mul(&s2.pow(d as u32)).mul(&ee));
        }
    }
    (u, v)
}

/// Monomial order selector; only graded lex (with an optional variable
/// precedence permutation) is meaningful here.
#[derive(Clone, Debug)]
pub struct MonomialOrder {
    /// precedence[i] = rank of variable i; lower rank = higher precedence.
    pub precedence: Vec<usize>,
}

impl MonomialOrder {
    pub fn grlex(ring: &RingCtx) -> MonomialOrder {
        MonomialOrder { precedence: (0..ring.nvars()).collect() }
    }

    pub fn validate(&self, ring: &RingCtx) -> Result<(), String> {
        let n = ring.nvars();
        if self.precedence.len() != n {
            return Err("order length mismatch".into());
        }
        let mut seen = vec![false; n];
        for &p in &self.precedence {
            if p >= n || seen[p] {
                return Err("order is not a permutation".into());
            }
            seen[p] = true;
        }
        Ok(())
    }

    fn cmp(&self, a: &Mono, b: &Mono, ring: &RingCtx) -> std::cmp::Ordering {
        let da = a.degree(ring);
        let db = b.degree(ring);
        da.cmp(&db).then_with(|| {
            // lex by precedence rank
            let n = a.0.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| self.precedence[i]);
            for i in order {
                match a.0[i].cmp(&b.0[i]) {
                    std::cmp::Ordering::Equal => {}
                    o => return o,
                }
            }
            std::cmp::Ordering::Equal
        })
    }
}

/// A relation set with precomputed leading terms, used for normal forms.
#[derive(Clone, Debug)]
pub struct RelSet<F: Field> {
    pub ring: Arc<RingCtx>,
    pub order: MonomialOrder,
    pub rels: Vec<Poly<F>>,
    leads: Vec<(Mono, F)>,
}

impl<F: Field> RelSet<F> {
    pub fn new(
        ring: &Arc<RingCtx>,
        order: MonomialOrder,
        rels: Vec<Poly<F>>,
    ) -> Result<RelSet<F>, String> {
        order.validate(ring)?;
        let mut set = RelSet { ring: ring.clone(), order, rels: vec![], leads: vec![] };
        for r in rels {
            set.push(r)?;
        }
        Ok(set)
    }

    fn push(&mut self, r: Poly<F>) -> Result<(), String> {
        if r.is_zero() {
            return Ok(());
        }
        let (m, c) = r
            .terms
            .iter()
            .max_by(|(m1, _), (m2, _)| self.order.cmp(m1, m2, &self.ring))
            .map(|(m, c)| (m.clone(), c.clone()))
            .unwrap();
        if c.inv().is_none() {
            return Err("relation has non-invertible leading coefficient".into());
        }
        self.leads.push((m, c));
        self.rels.push(r);
        Ok(())
    }

    /// Fully reduce `p` modulo the relations (leading-term rewriting).
    pub fn normal_form(&self, p: &Poly<F>) -> Poly<F> {
        let mut work = p.clone();
        let mut out = Poly::zero(&self.ring);
        // repeatedly rewrite the largest reducible term
        'outer: loop {
            // find largest term of work
            let Some((m, c)) = work
                .terms
                .iter()
                .max_by(|(m1, _), (m2, _)| self.order.cmp(m1, m2, &self.ring))
                .map(|(m, c)| (m.clone(), c.clone()))
            else {
                break;
            };
            for (idx, (lm, lc)) in self.leads.iter().enumerate() {
                if lm.divides(&m) {
                    let q = m.div(lm);
                    let factor = c.mul(&lc.inv().unwrap());
                    let sub = self.rels[idx].mul_mono(&q, &factor);
                    work = work.sub(&sub);
                    continue 'outer;
                }
            }
            // irreducible: move to output
            work.terms.remove(&m);
            out.add_term(m, c);
        }
        out
    }

    /// Is the monomial in normal form (not divisible by any leading term)?
    pub fn is_nf_mono(&self, m: &Mono) -> bool {
        self.leads.iter().all(|(lm, _)| !lm.divides(m))
    }

    /// Buchberger-style completion by S-pair reduction, bounded in degree.
    /// Returns the number of relations added. After completion with all
    /// S-polynomials reducing to zero within the bound, normal forms are
    /// confluent up to that degree.
    pub fn complete(&mut self, degree_bound: i64) -> usize {
        let mut added = 0;
        let mut i = 0;
        while i < self.rels.len() {
            for j in 0..i {
                let (mi, ci) = self.leads[i].clone();
                let (mj, cj) = self.leads[j].clone();
                let l = mi.lcm(&mj);
                if l.degree(&self.ring) > degree_bound {
                    continue;
                }
                // coprime leading monomials: S-pair reduces (Buchberger 1)
                if l == mi.mul(&mj) {
                    continue;
                }
                let si = self.rels[i].mul_mono(&l.div(&mi), &ci.inv().unwrap());
                let sj = self.rels[j].mul_mono(&l.div(&mj), &cj.inv().unwrap());
                let s = si.sub(&sj);
                let nf = self.normal_form(&s);
                if !nf.is_zero() {
                    self.push(nf).expect("completion produced bad relation");
                    added += 1;
                }
            }
            i += 1;
        }
        added
    }

    /// Check confluence up to the degree bound: every S-polynomial of the
    /// current relations reduces to zero.
    pub fn is_confluent(&self, degree_bound: i64) -> bool {
        for i in 0..self.rels.len() {
            for j in 0..i {
                let (mi, ci) = self.leads[i].clone();
                let (mj, cj) = self.leads[j].clone();
                let l = mi.lcm(&mj);
                if l.degree(&self.ring) > degree_bound || l == mi.mul(&mj) {
                    continue;
                }
                let si = self.rels[i].mul_mono(&l.div(&mi), &ci.inv().unwrap());
                let sj = self.rels[j].mul_mono(&l.div(&mj), &cj.inv().unwrap());
                if !self.normal_form(&si.sub(&sj)).is_zero() {
                    return false;
                }
            }
        }
        true
    }
}

/// Normal form of `p` against ad-hoc relations (spec surface; builds a
/// RelSet and reduces).
pub fn normal_form<F: Field>(
    p: &Poly<F>,
    relations: &[Poly<F>],
    order: MonomialOrder,
) -> Result<Poly<F>, String> {
    let set = RelSet::new(&p.ring, order, relations.to_vec())?;
    Ok(set.normal_form(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rat;

    fn spec(n: u32, v: Variant) -> PotentialSpec {
        PotentialSpec::new(n, v).unwrap()
    }

    #[test]
    fn potential_examples() {
        // (generic, N=2, x1) -> x1^3
        let s = spec(2, Variant::Generic);
        let ring = RingCtx::new(s, &["x1"]);
        let w: Poly<Rat> = potential(s, &ring, "x1");
        assert_eq!(w, Poly::var_named(&ring, "x1").pow(3));

        // (equivariant, N=2, x1) -> x1^3 - a x1
        let s = spec(2, Variant::Equivariant);
        let ring = RingCtx::new(s, &["x1"]);
        let w: Poly<Rat> = potential(s, &ring, "x1");
        let x = Poly::var_named(&ring, "x1");
        let a = Poly::var_named(&ring, "a");
        assert_eq!(w, x.pow(3).sub(&a.mul(&x)));

        // (deformed, N=3, x5) -> x5^4 - x5
        let s = spec(3, Variant::Deformed);
        let ring = RingCtx::new(s, &["x5"]);
        let w: Poly<Rat> = potential(s, &ring, "x5");
        let x = Poly::var_named(&ring, "x5");
        assert_eq!(w, x.pow(4).sub(&x));
    }

    #[test]
    fn n_below_two_rejected() {
        assert!(PotentialSpec::new(1, Variant::Generic).is_err());
        assert!(PotentialSpec::new(0, Variant::Deformed).is_err());
    }

    /// Test-local long division oracle: divide p by (xi - xj) one step at a
    /// time, independent of the production divided-difference path.
    fn divide_oracle(p: &Poly<Rat>, i: usize, j: usize) -> Poly<Rat> {
        let ring = p.ring.clone();
        let xi = Poly::var(&ring, i);
        let xj = Poly::var(&ring, j);
        let den = xi.sub(&xj);
        let mut rem = p.clone();
        let mut quot = Poly::zero(&ring);
        while let Some((m, c)) = rem
            .terms
            .iter()
            .filter(|(m, _)| m.0[i] > 0)
            .max_by(|(a, _), (b, _)| a.grlex_cmp(b, &ring))
            .map(|(m, c)| (m.clone(), c.clone()))
        {
            let mut q = m.clone();
            q.0[i] -= 1;
            let t = Poly::monomial(&ring, q, c);
            rem = rem.sub(&t.mul(&den));
            quot = quot.add(&t);
        }
        assert!(rem.is_zero(), "oracle division has remainder");
        quot
    }

    #[test]
    fn pi_quotient_generic_n2() {
        let s = spec(2, Variant::Generic);
        let ring = RingCtx::new(s, &["xi", "xj"]);
        let pi: Poly<Rat> = pi_quotient(s, &ring, "xi", "xj");
        // oracle: divide xi^3 - xj^3 by xi - xj
        let wi: Poly<Rat> = potential(s, &ring, "xi");
        let wj: Poly<Rat> = potential(s, &ring, "xj");
        let expect = divide_oracle(&wi.sub(&wj), 0, 1);
        assert_eq!(pi, expect);
        // = xi^2 + xi xj + xj^2
        let xi = Poly::var_named(&ring, "xi");
        let xj = Poly::var_named(&ring, "xj");
        assert_eq!(pi, xi.pow(2).add(&xi.mul(&xj)).add(&xj.pow(2)));
    }

    #[test]
    fn pi_quotient_equivariant_n2() {
        let s = spec(2, Variant::Equivariant);
        let ring = RingCtx::new(s, &["xi", "xj"]);
        let pi: Poly<Rat> = pi_quotient(s, &ring, "xi", "xj");
        let xi = Poly::var_named(&ring, "xi");
        let xj = Poly::var_named(&ring, "xj");
        let a = Poly::var_named(&ring, "a");
        assert_eq!(pi, xi.pow(2).add(&xi.mul(&xj)).add(&xj.pow(2)).sub(&a));
    }

    #[test]
    fn pi_defining_identity_all_variants() {
        for v in [Variant::Generic, Variant::Equivariant, Variant::Deformed] {
            for n in 2..=4 {
                let s = spec(n, v);
                let ring = RingCtx::new(s, &["xi", "xj"]);
                let pi: Poly<Rat> = pi_quotient(s, &ring, "xi", "xj");
                let xi = Poly::var_named(&ring, "xi");
                let xj = Poly::var_named(&ring, "xj");
                let wi: Poly<Rat> = potential(s, &ring, "xi");
                let wj: Poly<Rat> = potential(s, &ring, "xj");
                assert_eq!(pi.mul(&xi.sub(&xj)), wi.sub(&wj));
            }
        }
    }

    #[test]
    fn uv_defining_identity() {
        for v in [Variant::Generic, Variant::Equivariant, Variant::Deformed] {
            for n in 2..=4 {
                let s = spec(n, v);
                let ring = RingCtx::new(s, &["x1", "x2", "x3", "x4"]);
                let (u, vv): (Poly<Rat>, Poly<Rat>) =
                    uv_quotients(s, &ring, "x1", "x2", "x3", "x4");
                let x = |k: &str| Poly::<Rat>::var_named(&ring, k);
                let e1 = x("x1").add(&x("x2")).sub(&x("x3")).sub(&x("x4"));
                let e2 = x("x1").mul(&x("x2")).sub(&x("x3").mul(&x("x4")));
                let lhs = u.mul(&e1).add(&vv.mul(&e2));
                let w = |k: &str| potential::<Rat>(s, &ring, k);
                let rhs = w("x1").add(&w("x2")).sub(&w("x3")).sub(&w("x4"));
                assert_eq!(lhs, rhs, "uv identity fails N={n} {v:?}");
            }
        }
    }

    #[test]
    fn uv_1212_equivariant_n2() {
        let s = spec(2, Variant::Equivariant);
        let ring = RingCtx::new(s, &["x1", "x2"]);
        let (u, v): (Poly<Rat>, Poly<Rat>) = uv_quotients(s, &ring, "x1", "x2", "x1", "x2");
        let x1 = Poly::<Rat>::var_named(&ring, "x1");
        let x2 = Poly::<Rat>::var_named(&ring, "x2");
        let a = Poly::<Rat>::var_named(&ring, "a");
        // v_{1212} = -3(x1 + x2)
        assert_eq!(v, x1.add(&x2).scale(&Rat::from_i64(-3)));
        // u_{1212} = 3(x1^2 + x1 x2 + x2^2) - a ; the sign of a comes from the
        // defining quotient identity (the appendix prints +a).
        let expect =
            x1.pow(2).add(&x1.mul(&x2)).add(&x2.pow(2)).scale(&Rat::from_i64(3)).sub(&a);
        assert_eq!(u, expect);
    }

    #[test]
    fn uv_gradings() {
        // u homogeneous of degree 2N, v of degree 2N-2 (graded variants)
        for v in [Variant::Generic, Variant::Equivariant] {
            for n in 2..=4 {
                let s = spec(n, v);
                let ring = RingCtx::new(s, &["x1", "x2", "x3", "x4"]);
                let (u, vv): (Poly<Rat>, Poly<Rat>) =
                    uv_quotients(s, &ring, "x1", "x2", "x3", "x4");
                assert_eq!(u.homogeneous_degree(), Some(2 * n as i64));
                assert_eq!(vv.homogeneous_degree(), Some(2 * n as i64 - 2));
            }
        }
    }

    #[test]
    fn normal_form_examples() {
        let s = spec(2, Variant::Generic);
        let ring = RingCtx::new(s, &["x1", "x2"]);
        let x1 = Poly::<Rat>::var_named(&ring, "x1");
        let x2 = Poly::<Rat>::var_named(&ring, "x2");

        // p = x2 + x1, relations {x1 + x2} -> 0
        let nf = normal_form(
            &x1.add(&x2),
            &[x1.add(&x2)],
            MonomialOrder::grlex(&ring),
        )
        .unwrap();
        assert!(nf.is_zero());

        // p = x2^2, relations {3(x1+x2), 3(x1^2+x1x2+x2^2)} reduces into span{1, x1}... i.e.
        // substitute x2 = -x1 then x1^2 = 0: result 0 here, and x1*x2 -> -x1^2 -> 0.
        let r1 = x1.add(&x2).scale(&Rat::from_i64(3));
        let r2 = x1.pow(2).add(&x1.mul(&x2)).add(&x2.pow(2)).scale(&Rat::from_i64(3));
        let mut set =
            RelSet::new(&ring, MonomialOrder::grlex(&ring), vec![r1, r2]).unwrap();
        set.complete(12);
        assert!(set.is_confluent(12));
        let nf = set.normal_form(&x2.pow(2));
        assert!(nf.is_zero(), "x2^2 should die in the N=2 closed-wide-edge ring, got {nf}");
        // the reduced span is 2-dimensional: {1, x2} here, which is {1, x1}
        // up to the unit change of basis x1 = -x2 forced by the first relation
        assert_eq!(set.normal_form(&x1), x2.neg());
        assert!(set.normal_form(&x1.pow(2)).is_zero());
        assert_eq!(set.normal_form(&x2), x2);
    }

    #[test]
    fn normal_form_rejects_bad_order() {
        let s = spec(2, Variant::Generic);
        let ring = RingCtx::new(s, &["x1", "x2"]);
        let x1 = Poly::<Rat>::var_named(&ring, "x1");
        let bad = MonomialOrder { precedence: vec![0, 0] };
        assert!(normal_form(&x1, &[], bad).is_err());
    }

    #[test]
    fn pi_precondition() {
        let s = spec(2, Variant::Generic);
        let ring = RingCtx::new(s, &["x1", "x2"]);
        let res = std::panic::catch_unwind(|| {
            let _: Poly<Rat> = pi_quotient(s, &ring, "x1", "x1");
        });
        assert!(res.is_err());
    }
}
