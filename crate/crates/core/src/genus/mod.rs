//! Genus enumeration by Kneser's p-neighbor construction, partition into
//! spin genera, and the class weights entering the averaged
//! representation numbers.

pub mod spinor;

use crate::arith::{int, odd_primes_avoiding, Int, Rat};
use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::lattice::{automorphisms, isometric, minkowski_reduce, QuadLattice};
use crate::localrep::locally_isometric;
use crate::mat::{IMat, QMat};
use num_integer::Integer;
use num_traits::{One, Zero};
use spinor::{spinor_norm, squarefree_mul, ObstructionGroup};
use std::collections::VecDeque;

/// One isometry class in a genus.
#[derive(Clone, Debug)]
pub struct GenusClass {
    /// Minkowski-reduced representative
    pub lattice: QuadLattice,
    /// basis matrix B with B^T E_base B = E_class (columns are rational
    /// coordinates in the base lattice)
    pub embedding: QMat,
    pub aut_order: u64,
    /// 1 / #Aut
    pub weight: Rat,
}

#[derive(Clone, Debug)]
pub struct GenusPartition {
    pub base: QuadLattice,
    /// index of the class containing the base lattice
    pub base_class: usize,
    pub classes: Vec<GenusClass>,
    /// partition of class indices into spin genera; empty until
    /// spin_partition has run
    pub spin_blocks: Vec<Vec<usize>>,
    pub omega_gen: Rat,
    /// per spin block, parallel to spin_blocks
    pub omega_spn: Vec<Rat>,
    pub neighbor_primes: Vec<u64>,
    /// square classes exhibited by closure cycles while separating the
    /// spin blocks (diagnostic; non-empty means the initial local groups
    /// were deficient and got repaired)
    pub spin_healed: u64,
}

impl GenusPartition {
    /// Spin block index of a class.
    pub fn block_of(&self, class_idx: usize) -> Option<usize> {
        self.spin_blocks.iter().position(|b| b.contains(&class_idx))
    }
}

/// All p-neighbors of L for an odd prime p not dividing det E, reduced
/// and deduplicated up to isometry.
pub fn neighbors(l: &QuadLattice, p: u64, caps: &Caps) -> Result<Vec<QuadLattice>> {
    let raw = raw_neighbors(l, p, caps)?;
    let mut out: Vec<QuadLattice> = Vec::new();
    for (lat, _) in raw {
        let mut known = false;
        for seen in &out {
            if isometric(seen, &lat, caps)?.is_some() {
                known = true;
                break;
            }
        }
        if !known {
            out.push(lat);
        }
    }
    Ok(out)
}

/// Neighbors with their base-change matrices: each entry is the reduced
/// neighbor lattice together with the rational matrix N with columns the
/// coordinates of the neighbor's basis in the basis of L.
fn raw_neighbors(l: &QuadLattice, p: u64, caps: &Caps) -> Result<Vec<(QuadLattice, QMat)>> {
    if p % 2 == 0 || !crate::arith::is_prime_u64(p) {
        return Err(Error::InvalidInput(format!("neighbor prime {p} must be odd")));
    }
    if (l.det_e() % int(p as i64)).is_zero() {
        return Err(Error::InvalidInput(format!(
            "neighbor prime {p} must not divide det E"
        )));
    }
    let n = l.rank();
    let pi = int(p as i64);
    let mut out = Vec::new();
    for v in isotropic_lines(l, p) {
        // adjust v <- v + p c e_j so that Q(v) = 0 mod p^2, using
        // (v + p w)_Q = Q(v) + p (v, w)_E mod p^2
        let mut vv = v;
        let q = l.q(&vv);
        debug_assert!((&q % &pi).is_zero());
        let need = (-(&q / &pi)).mod_floor(&pi);
        if !need.is_zero() {
            let ev = l.doubled_gram().mul_vec(&vv);
            let j = (0..n)
                .find(|&j| !(ev[j].mod_floor(&pi)).is_zero())
                .expect("form is nondegenerate mod p");
            let inv = crate::arith::inv_mod(&ev[j].mod_floor(&pi), &pi).unwrap();
            let c = (&need * &inv).mod_floor(&pi);
            vv[j] += &c * &pi;
        }
        debug_assert!((l.q(&vv) % (&pi * &pi)).is_zero());
        // p N = p M + Z vv where M = { x : (vv, x)_E = 0 mod p }
        let ev = l.doubled_gram().mul_vec(&vv);
        let a_mod: Vec<Int> = ev.iter().map(|x| x.mod_floor(&pi)).collect();
        let j0 = (0..n)
            .find(|&j| !a_mod[j].is_zero())
            .expect("form is nondegenerate mod p");
        let inv = crate::arith::inv_mod(&a_mod[j0], &pi).unwrap();
        // generators of p N as rows: p * basis(M) and vv
        let mut gens: Vec<Vec<Int>> = Vec::with_capacity(n + 1);
        for j in 0..n {
            if j == j0 {
                let mut g = vec![Int::zero(); n];
                g[j0] = &pi * &pi;
                gens.push(g);
            } else {
                // e_j - (a_j / a_j0) e_j0 in M
                let c = (&a_mod[j] * &inv).mod_floor(&pi);
                let mut g = vec![Int::zero(); n];
                g[j] = pi.clone();
                g[j0] = -(&c * &pi);
                gens.push(g);
            }
        }
        gens.push(vv.clone());
        let gm = IMat::from_rows(gens);
        let h = gm.row_hnf();
        // rows 0..n of h form a basis of p N; as columns divided by p
        let basis = IMat::from_fn(n, n, |r, c| h[(c, r)].clone());
        let e2 = basis.transpose().mul(l.doubled_gram()).mul(&basis);
        // E_N = basis^T E basis / p^2, integral with even diagonal
        let p2 = &pi * &pi;
        let e_n = IMat::from_fn(n, n, |r, c| {
            let (q, rem) = e2[(r, c)].div_rem(&p2);
            debug_assert!(rem.is_zero(), "neighbor Gram must be divisible by p^2");
            q
        });
        let neigh = QuadLattice::from_doubled_gram(e_n)?;
        debug_assert_eq!(neigh.det_e(), l.det_e());
        let (reduced, u) = minkowski_reduce(&neigh, caps)?;
        // embedding: columns = basis/p times the reduction
        let embed = QMat::from_fn(n, n, |r, c| Rat::new(basis[(r, c)].clone(), pi.clone()));
        let embed = embed.mul(&u.u.to_rat());
        out.push((reduced, embed));
    }
    Ok(out)
}

/// Canonical representatives of the isotropic lines of Q mod p: first
/// non-zero coordinate 1, Q(v) = 0 mod p, v != 0.
fn isotropic_lines(l: &QuadLattice, p: u64) -> Vec<Vec<Int>> {
    let n = l.rank();
    let pi = int(p as i64);
    let mut out = Vec::new();
    // pivot position k: coords < k zero, coord k = 1, coords > k free
    for k in 0..n {
        let free = n - k - 1;
        let mut counter = vec![0u64; free];
        loop {
            let mut v = vec![Int::zero(); n];
            v[k] = Int::one();
            for (i, &c) in counter.iter().enumerate() {
                v[k + 1 + i] = int(c as i64);
            }
            if (l.q(&v).mod_floor(&pi)).is_zero() {
                out.push(v);
            }
            // odometer
            let mut carry = true;
            for c in counter.iter_mut() {
                *c += 1;
                if *c == p {
                    *c = 0;
                } else {
                    carry = false;
                    break;
                }
            }
            if carry {
                break;
            }
        }
    }
    out
}

/// Internal edge record from the closure: class `from` has a p-neighbor
/// isometric to class `to`; `obstruction` is the squarefree class of
/// theta(sigma) * p for the connecting rational isometry sigma.
#[derive(Clone, Debug)]
struct ClosureEdge {
    from: usize,
    to: usize,
    obstruction: Int,
}

/// Enumerate the genus of L as isometry classes via neighbor closure at
/// the two smallest admissible primes. Classes are ordered by
/// (minimum, reduced Gram lexicographic); weights and #Aut are computed
/// per class. Spin blocks are filled for rank >= 3.
pub fn genus_classes(l: &QuadLattice, caps: &Caps) -> Result<GenusPartition> {
    if l.rank() < 2 {
        return Err(Error::InvalidInput("genus enumeration needs rank >= 2".into()));
    }
    let primes = odd_primes_avoiding(&l.det_e(), 2);
    let (base_red, base_u) = minkowski_reduce(l, caps)?;
    let mut classes: Vec<GenusClass> = Vec::new();
    let mut embeds: Vec<QMat> = Vec::new();
    let mut edges: Vec<ClosureEdge> = Vec::new();
    classes.push(GenusClass {
        lattice: base_red.clone(),
        embedding: base_u.u.to_rat(),
        aut_order: 0,
        weight: Rat::zero(),
    });
    embeds.push(base_u.u.to_rat());
    let mut queue: VecDeque<usize> = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        let current = classes[i].lattice.clone();
        let current_embed = embeds[i].clone();
        for &p in &primes {
            for (neigh, rel_embed) in raw_neighbors(&current, p, caps)? {
                let embed = current_embed.mul(&rel_embed);
                // match against known classes
                let mut target: Option<(usize, crate::lattice::UnimodularChange)> = None;
                for (j, known) in classes.iter().enumerate() {
                    if let Some(w) = isometric(&neigh, &known.lattice, caps)? {
                        target = Some((j, w));
                        break;
                    }
                }
                let (j, witness) = match target {
                    Some(t) => t,
                    None => {
                        if classes.len() as u64 >= caps.classes {
                            return Err(Error::Resource {
                                what: "genus classes",
                                cap: caps.classes,
                            });
                        }
                        classes.push(GenusClass {
                            lattice: neigh.clone(),
                            embedding: embed.clone(),
                            aut_order: 0,
                            weight: Rat::zero(),
                        });
                        embeds.push(embed.clone());
                        queue.push_back(classes.len() - 1);
                        (
                            classes.len() - 1,
                            crate::lattice::UnimodularChange::identity(l.rank()),
                        )
                    }
                };
                // sigma maps the stored embedding of class j onto the
                // neighbor embedding; obstruction = theta(sigma) * p
                let sigma = embed
                    .mul(&witness.u.to_rat())
                    .mul(&embeds[j].inverse().expect("embedding invertible"));
                let theta = spinor_norm(&sigma, l.doubled_gram())?;
                let obstruction = squarefree_mul(&theta, &int(p as i64));
                edges.push(ClosureEdge {
                    from: i,
                    to: j,
                    obstruction,
                });
            }
        }
    }
    // verify genus membership: locally isometric to L at all bad primes
    // and at one good prime
    let bad = crate::arith::prime_divisors(&(int(2) * l.det_e()));
    let good_probe = odd_primes_avoiding(&(l.det_e() * int((primes[0] * primes[1]) as i64)), 1)[0];
    for class in &classes {
        for &q in bad.iter().chain(std::iter::once(&good_probe)) {
            if !locally_isometric(&class.lattice, l, q, caps)? {
                return Err(Error::InvalidLattice(format!(
                    "closure produced a lattice outside the genus (fails at p = {q})"
                )));
            }
        }
    }
    // automorphism orders and weights
    for class in classes.iter_mut() {
        let (_, order) = automorphisms(&class.lattice, caps)?;
        class.aut_order = order;
        class.weight = Rat::new(Int::one(), Int::from(order));
    }
    // canonical order: (minimum, reduced Gram lexicographic row-major)
    let mut order: Vec<usize> = (0..classes.len()).collect();
    let key = |c: &GenusClass| -> (Int, Vec<Int>) {
        let min = (0..c.lattice.rank())
            .map(|i| &c.lattice.doubled_gram()[(i, i)] / int(2))
            .min()
            .unwrap();
        let mut flat = Vec::new();
        for r in 0..c.lattice.rank() {
            for cc in 0..c.lattice.rank() {
                flat.push(c.lattice.doubled_gram()[(r, cc)].clone());
            }
        }
        (min, flat)
    };
    order.sort_by(|&a, &b| key(&classes[a]).cmp(&key(&classes[b])));
    let rank_of: Vec<usize> = {
        let mut r = vec![0; order.len()];
        for (new_idx, &old_idx) in order.iter().enumerate() {
            r[old_idx] = new_idx;
        }
        r
    };
    let classes: Vec<GenusClass> = order.iter().map(|&i| classes[i].clone()).collect();
    let edges: Vec<ClosureEdge> = edges
        .into_iter()
        .map(|e| ClosureEdge {
            from: rank_of[e.from],
            to: rank_of[e.to],
            obstruction: e.obstruction,
        })
        .collect();
    let base_class = rank_of[0];
    let omega_gen: Rat = classes.iter().map(|c| c.weight.clone()).sum();
    let mut partition = GenusPartition {
        base: l.clone(),
        base_class,
        classes,
        spin_blocks: Vec::new(),
        omega_gen,
        omega_spn: Vec::new(),
        neighbor_primes: primes,
        spin_healed: 0,
    };
    if l.rank() >= 3 {
        spin_partition_with_edges(&mut partition, &edges, caps)?;
    }
    Ok(partition)
}

/// Partition the classes into spin genera using the closure edges.
fn spin_partition_with_edges(
    g: &mut GenusPartition,
    edges: &[ClosureEdge],
    caps: &Caps,
) -> Result<()> {
    let n_classes = g.classes.len();
    let mut obstruction = ObstructionGroup::for_lattice(&g.base, caps)?;
    // spinor norms of integral automorphisms are unit norms everywhere:
    // exhibit them (any-parity policy; reflections of the lattice itself)
    for class in &g.classes {
        let (gens, _) = automorphisms(&class.lattice, caps)?;
        for a in &gens {
            let sigma = class
                .embedding
                .mul(&a.u.to_rat())
                .mul(&class.embedding.inverse().expect("embedding invertible"));
            let theta = spinor_norm(&sigma, g.base.doubled_gram())?;
            obstruction.exhibit(theta);
        }
    }
    // spanning-tree labels from the base class
    let mut labels: Vec<Option<Int>> = vec![None; n_classes];
    labels[g.base_class] = Some(Int::one());
    let mut changed = true;
    while changed {
        changed = false;
        for e in edges {
            if let (Some(lf), None) = (labels[e.from].clone(), &labels[e.to]) {
                labels[e.to] = Some(squarefree_mul(&lf, &e.obstruction));
                changed = true;
            }
            if let (None, Some(lt)) = (&labels[e.from], labels[e.to].clone()) {
                labels[e.from] = Some(squarefree_mul(&lt, &e.obstruction));
                changed = true;
            }
        }
    }
    let labels: Vec<Int> = labels
        .into_iter()
        .map(|l| l.expect("closure graph is connected"))
        .collect();
    // non-tree edges exhibit trivial classes (cycle argument)
    let mut healed = 0u64;
    for e in edges {
        let c = squarefree_mul(
            &squarefree_mul(&labels[e.from], &labels[e.to]),
            &e.obstruction,
        );
        if !obstruction.is_trivial(&c) {
            obstruction.exhibit(c);
            healed += 1;
        }
    }
    // blocks: i ~ j iff label_i * label_j is trivial
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n_classes {
        let mut placed = false;
        for block in blocks.iter_mut() {
            let rep = block[0];
            let rel = squarefree_mul(&labels[i], &labels[rep]);
            if obstruction.is_trivial(&rel) {
                block.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            blocks.push(vec![i]);
        }
    }
    g.omega_spn = blocks
        .iter()
        .map(|b| b.iter().map(|&i| g.classes[i].weight.clone()).sum())
        .collect();
    g.spin_blocks = blocks;
    g.spin_healed = healed;
    Ok(())
}

/// Public entry: (re)compute the spin partition of an existing genus.
/// The closure edges are rebuilt by re-running the neighbor step once
/// from each class.
pub fn spin_partition(g: &GenusPartition, caps: &Caps) -> Result<GenusPartition> {
    if g.base.rank() < 3 {
        return Err(Error::InvalidInput(
            "spin partition needs rank >= 3".into(),
        ));
    }
    genus_classes(&g.base, caps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn i4_neighbors_single_class() {
        let i4 = QuadLattice::diagonal(&[1, 1, 1, 1]).unwrap();
        let ns = neighbors(&i4, 3, &caps()).unwrap();
        assert_eq!(ns.len(), 1);
        assert!(isometric(&ns[0], &i4, &caps()).unwrap().is_some());
    }

    #[test]
    fn rank_one_has_no_neighbors() {
        let l = QuadLattice::unary(&int(1)).unwrap();
        let ns = neighbors(&l, 3, &caps()).unwrap();
        assert!(ns.is_empty());
    }

    #[test]
    fn neighbor_prime_preconditions() {
        let i4 = QuadLattice::diagonal(&[1, 1, 1, 1]).unwrap();
        assert!(neighbors(&i4, 2, &caps()).is_err());
        let l5 = QuadLattice::diagonal(&[5, 5]).unwrap();
        assert!(neighbors(&l5, 5, &caps()).is_err());
    }

    #[test]
    fn genus_of_i4() {
        let i4 = QuadLattice::diagonal(&[1, 1, 1, 1]).unwrap();
        let g = genus_classes(&i4, &caps()).unwrap();
        assert_eq!(g.classes.len(), 1);
        assert_eq!(g.classes[0].aut_order, 384);
        assert_eq!(g.omega_gen, Rat::new(int(1), int(384)));
        assert_eq!(g.spin_blocks, vec![vec![0]]);
    }

    #[test]
    fn genus_of_i2() {
        let i2 = QuadLattice::diagonal(&[1, 1]).unwrap();
        let g = genus_classes(&i2, &caps()).unwrap();
        assert_eq!(g.classes.len(), 1);
        assert_eq!(g.classes[0].aut_order, 8);
    }

    #[test]
    fn kitaoka_genus_multiclass() {
        let l = QuadLattice::diagonal(&[1, 1, 25, 25]).unwrap();
        let g = genus_classes(&l, &caps()).unwrap();
        assert!(g.classes.len() >= 2, "class number should exceed 1");
        // weights normalize to 1
        let total: Rat = g
            .classes
            .iter()
            .map(|c| &c.weight / &g.omega_gen)
            .sum();
        assert_eq!(total, Rat::one());
        // spin blocks form a partition
        let mut seen: Vec<usize> = g.spin_blocks.concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..g.classes.len()).collect::<Vec<_>>());
        let spn_sum: Rat = g.omega_spn.iter().cloned().sum();
        assert_eq!(spn_sum, g.omega_gen);
    }
}
