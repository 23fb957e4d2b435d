use serde::{Deserialize, Serialize};

/// Product state |n⟩ ⊗ |j, m⟩. The spin projection is stored as 2m so that
/// half-integer spins stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub n: u32,
    pub two_m: i32,
}

impl BasisState {
    pub fn m(&self) -> f64 {
        self.two_m as f64 / 2.0
    }
}

/// Ordered product basis of a truncated oscillator and a spin-j.
///
/// States are sorted lexicographically by (n, m). Sub-bases produced by
/// symmetry projections keep that ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinBosonBasis {
    two_j: u32,
    cutoff: u32,
    states: Vec<BasisState>,
}

impl SpinBosonBasis {
    /// All (M+1)(2j+1) states with 0 ≤ n ≤ M and −j ≤ m ≤ j.
    pub fn full(two_j: u32, cutoff: u32) -> Self {
        let states = (0..=cutoff)
            .flat_map(|n| (0..=two_j as i32).map(move |k| BasisState { n, two_m: 2 * k - two_j as i32 }))
            .collect();
        Self { two_j, cutoff, states }
    }

    /// States of the full basis that satisfy `keep`, in basis order.
    pub fn filtered(two_j: u32, cutoff: u32, keep: impl Fn(&BasisState) -> bool) -> Self {
        let mut b = Self::full(two_j, cutoff);
        b.states.retain(|s| keep(s));
        b
    }

    /// States with n + m + j = q. The implied photon cutoff is q.
    pub fn excitation_sector(two_j: u32, q: u32) -> Self {
        let states = (0..=q)
            .filter_map(|n| {
                let k = q - n; // m + j
                (k <= two_j).then(|| BasisState { n, two_m: 2 * k as i32 - two_j as i32 })
            })
            .collect();
        Self { two_j, cutoff: q, states }
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    /// (−1)^(n + m + j).
    pub fn parity(&self, s: &BasisState) -> i32 {
        if self.excitation(s).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// n + m + j.
    pub fn excitation(&self, s: &BasisState) -> u32 {
        s.n + ((s.two_m + self.two_j as i32) / 2) as u32
    }

    /// Position of `s` in this basis.
    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.states.binary_search(s).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_basis_is_lexicographic_and_sized() {
        for (two_j, m) in [(0, 3), (1, 1), (2, 2), (5, 7)] {
            let b = SpinBosonBasis::full(two_j, m);
            assert_eq!(b.dim(), (m as usize + 1) * (two_j as usize + 1));
            assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            for (i, s) in b.states().iter().enumerate() {
                assert_eq!(b.index_of(s), Some(i));
                assert!(b.parity(s) == 1 || b.parity(s) == -1);
            }
        }
    }

    #[test]
    fn even_sector_spin_half_single_photon() {
        let full = SpinBosonBasis::full(1, 1);
        let even: Vec<_> = full.states().iter().filter(|s| full.parity(s) == 1).copied().collect();
        assert_eq!(
            even,
            vec![BasisState { n: 0, two_m: -1 }, BasisState { n: 1, two_m: 1 }]
        );
    }

    #[test]
    fn excitation_sector_sizes() {
        assert_eq!(SpinBosonBasis::excitation_sector(2, 0).dim(), 1);
        assert_eq!(SpinBosonBasis::excitation_sector(2, 1).dim(), 2);
        assert_eq!(SpinBosonBasis::excitation_sector(2, 2).dim(), 3);
        assert_eq!(SpinBosonBasis::excitation_sector(2, 9).dim(), 3);
        let b = SpinBosonBasis::excitation_sector(3, 4);
        assert!(b.states().iter().all(|s| b.excitation(s) == 4));
        assert!(b.states().windows(2).all(|w| w[0] < w[1]));
    }
}
