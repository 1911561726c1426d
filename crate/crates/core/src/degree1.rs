//! Explicit degree-1 chains on Z: the prism homotopy between the unit-step
//! cycle and its `n`-step sparsification, and the disjoint-support
//! rewriting of `n` times the unit-step cycle.

use std::collections::BTreeSet;

use num_traits::One;

use crate::chain::{Ring, Simplex, UFChain};
use crate::error::{Error, Result};
use crate::space::{build_window, Point, Presentation, Window};
use crate::Rat;

fn p(x: i64) -> Point {
    Point::int(x)
}

fn z_window(center: i64, radius: u64, margin: u64, n: i64) -> Result<Window> {
    if n < 1 {
        return Err(Error::Contract("n must be positive".into()));
    }
    if (2 * radius + 1) < 3 * n as u64 || margin < n as u64 {
        return Err(Error::Window(format!(
            "window of radius {radius} and margin {margin} is too small for n = {n} (need length >= 3n, margin >= n)"
        )));
    }
    build_window(&Presentation::lattice(1), &p(center), radius, margin)
}

/// `gamma = sum (z, z+1)` restricted to the window.
pub fn unit_cycle(w: &Window) -> Result<UFChain> {
    let mut c = UFChain::zero(1, Ring::Int);
    for x in w.points() {
        let y = p(x.0[0] + 1);
        if w.index_of(&y).is_some() {
            c.add_term(vec![x.clone(), y], Rat::one())?;
        }
    }
    Ok(c)
}

/// `c_k = sum_{z in nZ + k} (z, z+n)` restricted to the window.
pub fn step_cycle(w: &Window, n: i64, k: i64) -> Result<UFChain> {
    let mut c = UFChain::zero(1, Ring::Int);
    for x in w.points() {
        let z = x.0[0];
        if (z - k).rem_euclid(n) == 0 && w.index_of(&p(z + n)).is_some() {
            c.add_term(vec![x.clone(), p(z + n)], Rat::one())?;
        }
    }
    Ok(c)
}

/// Prism chain `sum_{z in nZ + shift} [sum_j (z+j, z+j+1, z+n) - (z+n, z+n, z+n)]`,
/// keeping the terms inside the window.
pub fn prism_chain(w: &Window, n: i64, shift: i64) -> Result<UFChain> {
    let mut c = UFChain::zero(2, Ring::Int);
    let inside = |s: &Simplex| s.iter().all(|q| w.index_of(q).is_some());
    let (lo, hi) = w.points().iter().fold((i64::MAX, i64::MIN), |(lo, hi), q| {
        (lo.min(q.0[0]), hi.max(q.0[0]))
    });
    let first = lo - n - (lo - n - shift).rem_euclid(n);
    let mut z = first;
    while z <= hi {
        for j in 0..n {
            let s = vec![p(z + j), p(z + j + 1), p(z + n)];
            if inside(&s) {
                c.add_term(s, Rat::one())?;
            }
        }
        let s = vec![p(z + n); 3];
        if inside(&s) {
            c.add_term(s, -Rat::one())?;
        }
        z += n;
    }
    Ok(c)
}

/// Tuples whose points are all interior.
fn on_interior(w: &Window, c: &UFChain) -> UFChain {
    c.restrict(|s| {
        s.iter()
            .all(|q| w.index_of(q).is_some_and(|i| w.is_interior(i)))
    })
}

#[derive(Clone, Debug)]
pub struct PrismWitness {
    pub n: i64,
    pub window: Window,
    /// Degree-2 prism chain.
    pub chain: UFChain,
    /// `d(prism) = gamma - c_0` on interior tuples.
    pub verified: bool,
    /// Interior tuples where the identity fails (empty when verified).
    pub mismatches: Vec<Simplex>,
}

/// Build the prism for `n` on the Z-window and check its boundary against
/// `gamma - c_0` on the interior.
pub fn prism_certificate(n: i64, center: i64, radius: u64, margin: u64) -> Result<PrismWitness> {
    let w = z_window(center, radius, margin, n)?;
    let chain = prism_chain(&w, n, 0)?;
    let lhs = on_interior(&w, &chain.boundary()?);
    let rhs = on_interior(&w, &unit_cycle(&w)?.sub(&step_cycle(&w, n, 0)?)?);
    let diff = lhs.sub(&rhs)?;
    let mismatches: Vec<Simplex> = diff.terms().keys().cloned().collect();
    Ok(PrismWitness {
        n,
        window: w,
        chain,
        verified: mismatches.is_empty(),
        mismatches,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteReport {
    pub n: i64,
    /// `sum_k c_k`.
    pub cycle: UFChain,
    pub sup_norm: Rat,
    /// Supports of `c_0, ..., c_{n-1}` are pairwise disjoint.
    pub disjoint: bool,
    /// `n gamma - sum_k c_k = d(sum_k prism shifted by k)` on the interior.
    pub homologous: bool,
    pub witness: UFChain,
}

/// Rewrite `n * gamma` as the disjointly supported cycle `sum_k c_k`,
/// with the translated prisms as the homology witness.
pub fn rewrite_disjoint(n: i64, center: i64, radius: u64, margin: u64) -> Result<RewriteReport> {
    let w = z_window(center, radius, margin, n)?;
    let mut cycle = UFChain::zero(1, Ring::Int);
    let mut witness = UFChain::zero(2, Ring::Int);
    let mut supports: BTreeSet<Simplex> = BTreeSet::new();
    let mut disjoint = true;
    for k in 0..n {
        let ck = step_cycle(&w, n, k)?;
        for s in ck.terms().keys() {
            disjoint &= supports.insert(s.clone());
        }
        cycle = cycle.add(&ck)?;
        witness = witness.add(&prism_chain(&w, n, k)?)?;
    }
    let n_gamma = unit_cycle(&w)?.scale(&Rat::from_integer(n.into()));
    let lhs = on_interior(&w, &n_gamma.sub(&cycle)?);
    let rhs = on_interior(&w, &witness.boundary()?);
    Ok(RewriteReport {
        n,
        sup_norm: cycle.sup_norm(),
        cycle,
        disjoint,
        homologous: lhs == rhs,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::int;

    #[test]
    fn prism_identity() {
        let w = prism_certificate(1, 0, 10, 1).unwrap();
        assert!(w.verified);
        for (n, r) in [(3, 30), (6, 60)] {
            let w = prism_certificate(n, 0, r, n as u64).unwrap();
            assert!(w.verified, "n = {n}: {:?}", w.mismatches);
        }
        for n in 1..=8 {
            assert!(
                prism_certificate(n, 3, 5 * n as u64, n as u64)
                    .unwrap()
                    .verified
            );
        }
    }

    #[test]
    fn block_boundary_is_exact() {
        // single block at z = 0 for n = 3
        let w = z_window(0, 10, 3, 3).unwrap();
        let mut block = UFChain::zero(2, Ring::Int);
        for j in 0..3 {
            block.add_term(vec![p(j), p(j + 1), p(3)], int(1)).unwrap();
        }
        block.add_term(vec![p(3); 3], int(-1)).unwrap();
        let mut expected = UFChain::zero(1, Ring::Int);
        for j in 0..3 {
            expected.add_term(vec![p(j), p(j + 1)], int(1)).unwrap();
        }
        expected.add_term(vec![p(0), p(3)], int(-1)).unwrap();
        assert_eq!(block.boundary().unwrap(), expected);
        assert!(!w.is_empty());
    }

    #[test]
    fn small_windows_are_rejected() {
        assert!(matches!(
            prism_certificate(6, 0, 5, 6),
            Err(Error::Window(_))
        ));
        assert!(matches!(
            rewrite_disjoint(4, 0, 20, 2),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn disjoint_rewriting() {
        let r = rewrite_disjoint(2, 0, 20, 2).unwrap();
        assert_eq!(r.sup_norm, int(1));
        assert!(r.disjoint && r.homologous);
        assert!(r.cycle.terms().keys().all(|s| s[1].0[0] - s[0].0[0] == 2));
        for n in 1..=8 {
            let r = rewrite_disjoint(n, 0, 6 * n as u64, n as u64).unwrap();
            assert_eq!(r.sup_norm, int(1), "n = {n}");
            assert!(r.disjoint && r.homologous, "n = {n}");
        }
        let r = rewrite_disjoint(1, 0, 10, 1).unwrap();
        let w = z_window(0, 10, 1, 1).unwrap();
        assert_eq!(r.cycle, unit_cycle(&w).unwrap());
    }
}
