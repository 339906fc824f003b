//! The chain complex over GF(2) generated by non-degenerate critical points,
//! graded by Morse index, with boundary entries given by connecting-orbit
//! parities.

pub mod gf2;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use gf2::Gf2Matrix;

/// Which sublevel region is carved out of the ambient space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PSpec {
    /// Whole space (requires the objective bounded below).
    Empty,
    /// Values strictly below the threshold are removed.
    Sublevel(f64),
}

/// One generator: a critical point id with its grading and value.
#[derive(Clone, Copy, Debug)]
pub struct Generator {
    pub id: usize,
    pub index: usize,
    pub value: f64,
}

/// The assembled complex.
#[derive(Clone, Debug)]
pub struct MorseComplex {
    /// Generator ids per degree.
    pub generators: Vec<Vec<usize>>,
    /// `boundaries[k]` maps degree `k+1` chains to degree `k` chains
    /// (`|gen_k| x |gen_{k+1}|`).
    pub boundaries: Vec<Gf2Matrix>,
    pub p_spec: PSpec,
}

impl MorseComplex {
    /// Highest degree with generators.
    pub fn top_degree(&self) -> usize {
        self.generators.len().saturating_sub(1)
    }

    /// Boundary matrix out of degree `k` (into degree `k-1`).
    pub fn boundary(&self, k: usize) -> Option<&Gf2Matrix> {
        if k == 0 {
            None
        } else {
            self.boundaries.get(k - 1)
        }
    }
}

/// Builds the complex from graded generators and pairwise parities keyed as
/// `(hi_id, lo_id)`. Generators below a sublevel threshold are dropped; a
/// missing parity for any retained index-gap-1 pair is an error; the
/// composition of consecutive boundaries must vanish.
pub fn build_morse_complex(
    crits: &[Generator],
    parities: &BTreeMap<(usize, usize), u8>,
    p_spec: PSpec,
) -> Result<MorseComplex> {
    let retained: Vec<&Generator> = crits
        .iter()
        .filter(|g| match p_spec {
            PSpec::Empty => true,
            PSpec::Sublevel(a) => g.value >= a,
        })
        .collect();
    let top = retained.iter().map(|g| g.index).max().unwrap_or(0);
    let mut generators: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
    for g in &retained {
        generators[g.index].push(g.id);
    }
    for level in &mut generators {
        level.sort_unstable();
    }
    let mut boundaries = Vec::with_capacity(top);
    for k in 0..top {
        let lo = &generators[k];
        let hi = &generators[k + 1];
        let mut m = Gf2Matrix::zeros(lo.len(), hi.len());
        for (col, hi_id) in hi.iter().enumerate() {
            for (row, lo_id) in lo.iter().enumerate() {
                let parity =
                    parities
                        .get(&(*hi_id, *lo_id))
                        .copied()
                        .ok_or(Error::IncompleteParity {
                            hi: *hi_id,
                            lo: *lo_id,
                        })?;
                m.set(row, col, parity % 2 == 1);
            }
        }
        boundaries.push(m);
    }
    let complex = MorseComplex {
        generators,
        boundaries,
        p_spec,
    };
    if let Some(k) = first_nonzero_composition(&complex) {
        return Err(Error::BoundarySquareNonzero { k });
    }
    Ok(complex)
}

fn first_nonzero_composition(mc: &MorseComplex) -> Option<usize> {
    for k in 1..mc.generators.len().saturating_sub(1) {
        let d_k = &mc.boundaries[k - 1];
        let d_k1 = &mc.boundaries[k];
        if !d_k.mul(d_k1).is_zero() {
            return Some(k);
        }
    }
    None
}

/// Verifies `d . d = 0` across all degrees.
pub fn d_squared_zero(mc: &MorseComplex) -> bool {
    first_nonzero_composition(mc).is_none()
}

/// Betti numbers over GF(2):
/// `b_k = |gen_k| - rank d_k - rank d_{k+1}`.
pub fn betti(mc: &MorseComplex) -> Vec<usize> {
    let degrees = mc.generators.len();
    (0..degrees)
        .map(|k| {
            let gens = mc.generators[k].len();
            let rank_out = mc.boundary(k).map_or(0, Gf2Matrix::rank);
            let rank_in = mc.boundaries.get(k).map_or(0, Gf2Matrix::rank);
            gens - rank_out - rank_in
        })
        .collect()
}

/// Alternating sum of Betti numbers.
pub fn euler_characteristic(mc: &MorseComplex) -> i64 {
    betti(mc)
        .iter()
        .enumerate()
        .map(|(k, b)| if k % 2 == 0 { *b as i64 } else { -(*b as i64) })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parity_map(entries: &[((usize, usize), u8)]) -> BTreeMap<(usize, usize), u8> {
        entries.iter().copied().collect()
    }

    #[test]
    fn single_minimum_point_homology() {
        let crits = [Generator {
            id: 0,
            index: 0,
            value: 0.0,
        }];
        let mc = build_morse_complex(&crits, &BTreeMap::new(), PSpec::Empty).unwrap();
        assert!(d_squared_zero(&mc));
        assert_eq!(betti(&mc), vec![1]);
        assert_eq!(euler_characteristic(&mc), 1);
    }

    #[test]
    fn empty_complex_has_zero_betti() {
        let mc = build_morse_complex(&[], &BTreeMap::new(), PSpec::Empty).unwrap();
        assert!(d_squared_zero(&mc));
        assert_eq!(betti(&mc), vec![0]);
    }

    #[test]
    fn double_well_complex() {
        let crits = [
            Generator {
                id: 0,
                index: 0,
                value: 0.0,
            },
            Generator {
                id: 1,
                index: 0,
                value: 0.0,
            },
            Generator {
                id: 2,
                index: 1,
                value: 1.0,
            },
        ];
        let parities = parity_map(&[((2, 0), 1), ((2, 1), 1)]);
        let mc = build_morse_complex(&crits, &parities, PSpec::Empty).unwrap();
        assert!(d_squared_zero(&mc));
        // rank d1 = 1 by hand: the column (1, 1) is nonzero.
        assert_eq!(mc.boundaries[0].rank(), 1);
        assert_eq!(betti(&mc), vec![1, 0]);
    }

    #[test]
    fn missing_parity_is_reported() {
        let crits = [
            Generator {
                id: 0,
                index: 0,
                value: 0.0,
            },
            Generator {
                id: 2,
                index: 1,
                value: 1.0,
            },
        ];
        match build_morse_complex(&crits, &BTreeMap::new(), PSpec::Empty) {
            Err(Error::IncompleteParity { hi: 2, lo: 0 }) => {}
            other => panic!("expected incomplete parity, got {other:?}"),
        }
    }

    #[test]
    fn adversarial_nonzero_composition_is_an_integrity_error() {
        // One generator per degree 0, 1, 2 with both parities odd forces
        // d1 . d2 = 1 over GF(2).
        let crits = [
            Generator {
                id: 0,
                index: 0,
                value: 0.0,
            },
            Generator {
                id: 1,
                index: 1,
                value: 1.0,
            },
            Generator {
                id: 2,
                index: 2,
                value: 2.0,
            },
        ];
        let parities = parity_map(&[((1, 0), 1), ((2, 1), 1)]);
        match build_morse_complex(&crits, &parities, PSpec::Empty) {
            Err(Error::BoundarySquareNonzero { k: 1 }) => {}
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn quad_well_complex_collapses_to_point_homology() {
        // Four minima, four saddles, one peak; each saddle bounds the two
        // adjacent minima, the peak bounds all four saddles.
        let mut crits = Vec::new();
        for id in 0..4 {
            crits.push(Generator {
                id,
                index: 0,
                value: 0.0,
            });
        }
        for id in 4..8 {
            crits.push(Generator {
                id,
                index: 1,
                value: 1.0,
            });
        }
        crits.push(Generator {
            id: 8,
            index: 2,
            value: 2.0,
        });
        // Minima at corners (±1, ±1) indexed 0..4 counterclockwise; saddles
        // on edges between consecutive corners.
        let mut entries = Vec::new();
        for s in 0..4usize {
            entries.push(((4 + s, s), 1));
            entries.push(((4 + s, (s + 1) % 4), 1));
            // Unrelated pairs have even parity.
            entries.push(((4 + s, (s + 2) % 4), 0));
            entries.push(((4 + s, (s + 3) % 4), 0));
            entries.push(((8, 4 + s), 1));
        }
        let mc = build_morse_complex(&crits, &parity_map(&entries), PSpec::Empty).unwrap();
        assert!(d_squared_zero(&mc));
        assert_eq!(betti(&mc), vec![1, 0, 0]);
        assert_eq!(euler_characteristic(&mc), 1);
        // Morse inequalities.
        for (k, b) in betti(&mc).iter().enumerate() {
            assert!(*b <= mc.generators[k].len());
        }
    }

    #[test]
    fn sublevel_spec_drops_low_generators() {
        let crits = [
            Generator {
                id: 0,
                index: 0,
                value: -2.0,
            },
            Generator {
                id: 1,
                index: 0,
                value: 0.5,
            },
            Generator {
                id: 2,
                index: 1,
                value: 1.0,
            },
        ];
        // With the low minimum removed, the saddle kills the remaining one.
        let parities = parity_map(&[((2, 1), 1)]);
        let mc = build_morse_complex(&crits, &parities, PSpec::Sublevel(0.0)).unwrap();
        assert_eq!(mc.generators[0], vec![1]);
        assert_eq!(betti(&mc), vec![0, 0]);
    }
}
