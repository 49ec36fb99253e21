//! Bitmask model of the family `{S : |S| <= k} ∪ {⊤}`.

use matic_core::event::Event;
use matic_core::implicature::{Element, ImplicatureLattice};

pub fn lattice(n: usize, k: usize) -> ImplicatureLattice {
    let atoms = (0..n)
        .map(|i| Event::new(format!("a{i}"), i as u64, "x"))
        .collect();
    ImplicatureLattice::from_atoms(atoms, k)
}

pub fn to_set(mask: u32) -> Element {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

pub fn family(n: usize, k: usize) -> Vec<u32> {
    let top = (1u32 << n) - 1;
    (0..=top)
        .filter(|m| m.count_ones() as usize <= k || *m == top)
        .collect()
}

/// The greatest member of `fam` satisfying `ok`, if one exists.
pub fn greatest(fam: &[u32], ok: impl Fn(u32) -> bool) -> Option<u32> {
    let sat: Vec<u32> = fam.iter().copied().filter(|&z| ok(z)).collect();
    sat.iter()
        .copied()
        .find(|&g| sat.iter().all(|&z| z & !g == 0))
}

/// Number of maximal members of `fam` disjoint from `x`.
pub fn maximal_disjoint(fam: &[u32], x: u32) -> usize {
    fam.iter()
        .filter(|&&z| z & x == 0)
        .filter(|&&z| !fam.iter().any(|&w| w & x == 0 && w != z && z & !w == 0))
        .count()
}
