//! Translation between uniformly finite chains on a group and group-homology
//! chains with bounded-function coefficients.
//!
//! A simplex `(x_0, ..., x_n)` is written as `g^-1 . (e, t_1, ..., t_n)` with
//! `g = x_0^-1` and `t_i = x_0^-1 x_i`; the chain `c` becomes
//! `sum_t (e, t) (x) phi_t` where `phi_t(g) = c_{g^-1 (e, t)}`.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{Ring, Simplex, UFChain};
use crate::error::{Error, Result};
use crate::space::{build_window, Point, Presentation, Window};
use crate::Rat;

/// Finitely supported bounded function on the group.
pub type Coefficient = BTreeMap<Point, Rat>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistedChain {
    degree: usize,
    group: Presentation,
    terms: BTreeMap<Vec<Point>, Coefficient>,
}

impl TwistedChain {
    pub fn zero(degree: usize, group: Presentation) -> Self {
        TwistedChain {
            degree,
            group,
            terms: BTreeMap::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Point>, Coefficient> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `v` to `phi_t(g)`, dropping zeros.
    pub fn add_value(&mut self, t: Vec<Point>, g: Point, v: Rat) {
        if v.is_zero() {
            return;
        }
        let phi = self.terms.entry(t.clone()).or_default();
        let slot = phi.entry(g.clone()).or_insert_with(Rat::zero);
        *slot += v;
        if slot.is_zero() {
            phi.remove(&g);
            if phi.is_empty() {
                self.terms.remove(&t);
            }
        }
    }

    /// `sup_t sup_g |phi_t(g)|`.
    pub fn sup_norm(&self) -> Rat {
        self.terms
            .values()
            .flat_map(|phi| phi.values())
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// Boundary in the standard resolution. Face 0 of `(e, t_1, ..., t_n)`
    /// is `t_1 . (e, t_1^-1 t_2, ...)`, so the coefficient becomes
    /// `g' -> phi(t_1 g')`; face `j >= 1` drops `t_j` with sign `(-1)^j`.
    pub fn boundary(&self) -> TwistedChain {
        let g = &self.group;
        let mut out = TwistedChain::zero(self.degree.saturating_sub(1), g.clone());
        if self.degree == 0 {
            return out;
        }
        for (t, phi) in &self.terms {
            let t1_inv = g.inverse(&t[0]);
            let face0: Vec<Point> = t[1..].iter().map(|s| g.multiply(&t1_inv, s)).collect();
            for (x, v) in phi {
                // phi(t_1 g') = v  iff  g' = t_1^-1 x
                out.add_value(face0.clone(), g.multiply(&t1_inv, x), v.clone());
            }
            for j in 1..=self.degree {
                let mut face = t.clone();
                face.remove(j - 1);
                for (x, v) in phi {
                    let v = if j % 2 == 0 { v.clone() } else { -v.clone() };
                    out.add_value(face.clone(), x.clone(), v);
                }
            }
        }
        out
    }

    /// Module action `(h . phi)(g') = phi(h^-1 g')` applied to every coefficient.
    pub fn act(&self, h: &Point) -> TwistedChain {
        let g = &self.group;
        let mut out = TwistedChain::zero(self.degree, g.clone());
        for (t, phi) in &self.terms {
            for (x, v) in phi {
                out.add_value(t.clone(), g.multiply(h, x), v.clone());
            }
        }
        out
    }
}

/// `rho(c)`. Every simplex must lie in the window with diameter at most the margin.
pub fn rho_forward(c: &UFChain, w: &Window) -> Result<TwistedChain> {
    let g = w.presentation();
    if !g.is_group() {
        return Err(Error::Contract(
            "the translation needs a group presentation".into(),
        ));
    }
    let mut out = TwistedChain::zero(c.degree(), g.clone());
    for (s, v) in c.terms() {
        for (a, x) in s.iter().enumerate() {
            if w.index_of(x).is_none() {
                return Err(Error::Window(format!(
                    "point {x:?} lies outside the window"
                )));
            }
            for y in &s[a + 1..] {
                if g.distance(x, y) > w.margin() {
                    return Err(Error::Window(format!(
                        "simplex diameter exceeds the window margin {}",
                        w.margin()
                    )));
                }
            }
        }
        let x0_inv = g.inverse(&s[0]);
        let t: Vec<Point> = s[1..].iter().map(|x| g.multiply(&x0_inv, x)).collect();
        out.add_value(t, x0_inv, v.clone());
    }
    Ok(out)
}

/// Inverse translation: `x_0 = g^-1`, `x_i = g^-1 t_i`.
pub fn rho_inverse(tc: &TwistedChain, ring: Ring) -> Result<UFChain> {
    let g = &tc.group;
    let mut out = UFChain::zero(tc.degree, ring);
    for (t, phi) in &tc.terms {
        for (x, v) in phi {
            let x0 = g.inverse(x);
            let mut s: Simplex = vec![x0.clone()];
            s.extend(t.iter().map(|ti| g.multiply(&x0, ti)));
            out.add_term(s, v.clone())?;
        }
    }
    Ok(out)
}

/// Left translation of every simplex by `h`.
pub fn translate(c: &UFChain, p: &Presentation, h: &Point) -> Result<UFChain> {
    c.pushforward(|x| Some(p.multiply(h, x)))
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RhoReport {
    pub samples: usize,
    pub roundtrip_failures: usize,
    pub isometry_failures: usize,
    pub chain_map_failures: usize,
    pub action_failures: usize,
    pub linearity_failures: usize,
}

impl RhoReport {
    pub fn holds(&self) -> bool {
        self.samples > 0
            && self.roundtrip_failures == 0
            && self.isometry_failures == 0
            && self.chain_map_failures == 0
            && self.action_failures == 0
            && self.linearity_failures == 0
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "samples\troundtrip_failures\tisometry_failures\tchain_map_failures\taction_failures\tlinearity_failures\n{}\t{}\t{}\t{}\t{}\t{}\n",
            self.samples,
            self.roundtrip_failures,
            self.isometry_failures,
            self.chain_map_failures,
            self.action_failures,
            self.linearity_failures
        )
    }
}

/// Random integer chain of the given degree: simplices start at a point
/// within `radius - margin` of the base point and stay within `spread`.
pub fn random_chain(
    w: &Window,
    degree: usize,
    terms: usize,
    spread: i64,
    rng: &mut impl Rng,
) -> Result<UFChain> {
    let p = w.presentation();
    let dim = p
        .lattice_dim()
        .ok_or_else(|| Error::Contract("random chains are sampled on lattices".into()))?;
    let reach = (w.radius().unwrap_or(0) as i64 - spread).max(0);
    let mut c = UFChain::zero(degree, Ring::Int);
    for _ in 0..terms {
        let x0: Vec<i64> = (0..dim).map(|_| rng.gen_range(-reach..=reach)).collect();
        let mut s = vec![Point(x0.clone())];
        for _ in 0..degree {
            // each coordinate offset kept within spread / dim so the l1 diameter stays <= spread
            let step = (spread / dim as i64).max(0) / 2;
            s.push(Point(
                x0.iter()
                    .map(|&a| a + rng.gen_range(-step..=step))
                    .collect(),
            ));
        }
        c.add_term(s, Rat::from_integer(rng.gen_range(-5i64..=5).into()))?;
    }
    Ok(c)
}

/// Checks roundtrip, isometry, chain-map commutation, linearity and the
/// translation action on `samples` random chains of degrees `0..=max_degree`.
pub fn rho_roundtrip_check(
    p: &Presentation,
    radius: u64,
    samples: usize,
    max_degree: usize,
    seed: u64,
) -> Result<RhoReport> {
    let margin = 4;
    let w = build_window(p, &p.base_point(), radius, margin)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = RhoReport::default();
    let dim = p.lattice_dim().unwrap_or(1);
    for i in 0..samples {
        let degree = i % (max_degree + 1);
        let c = random_chain(&w, degree, 1 + i % 12, margin as i64, &mut rng)?;
        let d = random_chain(&w, degree, 1 + i % 5, margin as i64, &mut rng)?;
        rep.samples += 1;
        let rc = rho_forward(&c, &w)?;
        if rho_inverse(&rc, Ring::Int)? != c {
            rep.roundtrip_failures += 1;
        }
        if rc.sup_norm() != c.sup_norm() {
            rep.isometry_failures += 1;
        }
        if degree > 0 && rc.boundary() != rho_forward(&c.boundary()?, &w)? {
            rep.chain_map_failures += 1;
        }
        let sum = rho_forward(&c.add(&d)?, &w)?;
        let mut expected = rc.clone();
        for (t, phi) in rho_forward(&d, &w)?.terms {
            for (x, v) in phi {
                expected.add_value(t.clone(), x, v);
            }
        }
        if sum != expected {
            rep.linearity_failures += 1;
        }
        // translate by a small element so the image stays in the window
        let h = Point((0..dim).map(|_| rng.gen_range(-1i64..=1)).collect());
        let big = build_window(p, &p.base_point(), radius + 2, margin)?;
        let moved = rho_forward(&translate(&c, p, &h)?, &big)?;
        if moved != rc.act(&p.inverse(&h)) {
            rep.action_failures += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{constant_chain, int};
    use crate::degree1::prism_certificate;

    fn z_window(r: u64, m: u64) -> Window {
        build_window(&Presentation::lattice(1), &Point::int(0), r, m).unwrap()
    }

    #[test]
    fn fundamental_class_is_one_term() {
        let w = z_window(12, 2);
        let c = constant_chain(w.points(), int(1), Ring::Int);
        let rc = rho_forward(&c, &w).unwrap();
        assert_eq!(rc.terms().len(), 1);
        let phi = &rc.terms()[&Vec::<Point>::new()];
        assert_eq!(phi.len(), w.len());
        assert!(phi.values().all(|v| *v == int(1)));
        assert_eq!(rc.sup_norm(), int(1));
        assert_eq!(c.sup_norm(), int(1));
    }

    #[test]
    fn unit_steps_give_t_equal_one() {
        let w = z_window(12, 2);
        let mut c = UFChain::zero(1, Ring::Int);
        for z in -12..12 {
            c.add_term(vec![Point::int(z), Point::int(z + 1)], int(1))
                .unwrap();
        }
        let rc = rho_forward(&c, &w).unwrap();
        assert_eq!(
            rc.terms().keys().collect::<Vec<_>>(),
            vec![&vec![Point::int(1)]]
        );
        let phi = &rc.terms()[&vec![Point::int(1)]];
        // phi(g) = c_(-g, -g+1)
        assert_eq!(phi[&Point::int(3)], int(1));
        assert!(!phi.contains_key(&Point::int(-12)));
    }

    #[test]
    fn zero_chain() {
        let w = z_window(5, 1);
        assert!(rho_forward(&UFChain::zero(2, Ring::Int), &w)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn margin_violation() {
        let w = z_window(12, 2);
        let c = UFChain::from_terms(1, Ring::Int, [(vec![Point::int(0), Point::int(5)], int(1))])
            .unwrap();
        assert!(matches!(rho_forward(&c, &w), Err(Error::Window(_))));
    }

    #[test]
    fn roundtrip_on_z_and_z2() {
        let rep = rho_roundtrip_check(&Presentation::lattice(1), 12, 100, 2, 7).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let rep = rho_roundtrip_check(&Presentation::lattice(2), 6, 40, 2, 11).unwrap();
        assert!(rep.holds(), "{rep:?}");
    }

    #[test]
    fn prism_commutes() {
        let pw = prism_certificate(3, 0, 30, 3).unwrap();
        let rc = rho_forward(&pw.chain, &pw.window).unwrap();
        assert_eq!(
            rc.boundary(),
            rho_forward(&pw.chain.boundary().unwrap(), &pw.window).unwrap()
        );
        assert_eq!(rc.sup_norm(), int(1));
        assert!(rc.boundary().boundary().is_zero());
    }

    #[test]
    fn free_group_translation() {
        let p = Presentation::free_group(2).unwrap();
        let w = build_window(&p, &p.base_point(), 4, 2).unwrap();
        let a = Point(vec![1]);
        let b = Point(vec![2]);
        let ab = p.multiply(&a, &b);
        let c = UFChain::from_terms(1, Ring::Int, [(vec![a.clone(), ab.clone()], int(3))]).unwrap();
        let rc = rho_forward(&c, &w).unwrap();
        assert_eq!(rc.terms()[&vec![b]][&p.inverse(&a)], int(3));
        assert_eq!(rho_inverse(&rc, Ring::Int).unwrap(), c);
        assert_eq!(
            rc.boundary(),
            rho_forward(&c.boundary().unwrap(), &w).unwrap()
        );
    }
}
