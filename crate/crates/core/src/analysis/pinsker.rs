use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

const MASS_TOLERANCE: f64 = 1e-12;

/// Two joint mass functions on an `rows x cols` grid `A x B`, row-major
/// (`p[a * cols + b]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinskerInstance {
    pub rows: usize,
    pub cols: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinskerResult {
    /// Cells `(a, b)` whose conditional log-ratio exceeds one bit.
    pub s: Vec<(usize, usize)>,
    pub p_s: f64,
    /// Full L1 distance `sum |p - q|`.
    pub l1: f64,
    pub holds: bool,
}

fn check_mass(which: char, m: &[f64], rows: usize, cols: usize) -> Result<(), AnalysisError> {
    if m.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(AnalysisError::GridShape {
            rows,
            cols,
            len: m.len(),
        });
    }
    if let Some(x) = m.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(AnalysisError::InvalidMass {
            which,
            reason: format!("entry {x} is not a non-negative number"),
        });
    }
    let sum: f64 = m.iter().sum();
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(AnalysisError::InvalidMass {
            which,
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}

impl PinskerInstance {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>, q: Vec<f64>) -> Result<Self, AnalysisError> {
        check_mass('p', &p, rows, cols)?;
        check_mass('q', &q, rows, cols)?;
        Ok(Self { rows, cols, p, q })
    }

    fn column_marginal(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        (0..cols)
            .map(|b| (0..rows).map(|a| m[a * cols + b]).sum())
            .collect()
    }

    /// A random instance on a grid of at most `max_side x max_side`. About one
    /// in five is `p = q`, one in five has disjoint supports, one in five is a
    /// small perturbation; the rest are independent.
    pub fn random<R: Rng + ?Sized>(max_side: usize, rng: &mut R) -> Self {
        let rows = rng.gen_range(1..=max_side);
        let cols = rng.gen_range(1..=max_side);
        let n = rows * cols;
        let draw = |rng: &mut R, mask: &dyn Fn(usize) -> bool| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n)
                .map(|i| {
                    if mask(i) {
                        rng.gen::<f64>() + 1e-3
                    } else {
                        0.0
                    }
                })
                .collect();
            if v.iter().all(|x| *x == 0.0) {
                v[0] = 1.0;
            }
            normalize(v)
        };
        let (p, q) = match rng.gen_range(0..5) {
            0 => {
                let p = draw(rng, &|_| true);
                (p.clone(), p)
            }
            1 if n >= 2 => {
                let split = rng.gen_range(1..n);
                let p = draw(rng, &|i| i < split);
                let q = draw(rng, &|i| i >= split);
                (p, q)
            }
            2 => {
                let p = draw(rng, &|_| true);
                let q = normalize(
                    p.iter()
                        .map(|x| x * (1.0 + 0.05 * (rng.gen::<f64>() - 0.5)))
                        .collect(),
                );
                (p, q)
            }
            3 => {
                let keep: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
                (draw(rng, &|i| keep[i]), draw(rng, &|_| true))
            }
            _ => (draw(rng, &|_| true), draw(rng, &|_| true)),
        };
        Self { rows, cols, p, q }
    }
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    let mut out: Vec<f64> = v.iter().map(|x| x / sum).collect();
    // Push the rounding residue into the largest entry so the sum is 1 to
    // within an ulp or two.
    let residue = 1.0 - out.iter().sum::<f64>();
    let (imax, _) =
        out.iter().enumerate().fold(
            (0, f64::MIN),
            |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc },
        );
    out[imax] += residue;
    out
}

/// Finds `S = {(a,b) : log2(p(a|b) / q(a|b)) > 1}`, counting cells where
/// `q(a|b)` vanishes as infinite ratio, and checks `p(S) <= 2 * l1`.
pub fn reverse_pinsker_check(instance: &PinskerInstance) -> Result<PinskerResult, AnalysisError> {
    let PinskerInstance { rows, cols, p, q } = instance;
    let (rows, cols) = (*rows, *cols);
    check_mass('p', p, rows, cols)?;
    check_mass('q', q, rows, cols)?;
    let pb = PinskerInstance::column_marginal(p, rows, cols);
    let qb = PinskerInstance::column_marginal(q, rows, cols);
    let mut s = Vec::new();
    let mut p_s = 0.0;
    for a in 0..rows {
        for b in 0..cols {
            let i = a * cols + b;
            if pb[b] == 0.0 || p[i] == 0.0 {
                continue;
            }
            let pc = p[i] / pb[b];
            let in_s = if qb[b] == 0.0 || q[i] == 0.0 {
                true
            } else {
                (pc / (q[i] / qb[b])).log2() > 1.0
            };
            if in_s {
                s.push((a, b));
                p_s += p[i];
            }
        }
    }
    let l1: f64 = p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum();
    Ok(PinskerResult {
        s,
        p_s,
        l1,
        holds: p_s <= 2.0 * l1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_distributions_have_empty_s() {
        let p = vec![0.25; 4];
        let r = reverse_pinsker_check(&PinskerInstance::new(2, 2, p.clone(), p).unwrap()).unwrap();
        assert!(r.s.is_empty());
        assert_eq!((r.p_s, r.l1, r.holds), (0.0, 0.0, true));
    }

    #[test]
    fn point_mass_against_uniform_column() {
        // Four values of a under a single b, so q(a0|b) = 1/4.
        let p = vec![1.0, 0.0, 0.0, 0.0];
        let q = vec![0.25; 4];
        let r = reverse_pinsker_check(&PinskerInstance::new(4, 1, p, q).unwrap()).unwrap();
        assert_eq!(r.s, vec![(0, 0)]);
        assert_eq!(r.p_s, 1.0);
        assert_eq!(r.l1, 1.5);
        assert!(r.holds);
    }

    #[test]
    fn zero_conditional_in_q_joins_s() {
        let p = vec![0.5, 0.5];
        let q = vec![1.0, 0.0];
        let r = reverse_pinsker_check(&PinskerInstance::new(2, 1, p, q).unwrap()).unwrap();
        assert_eq!(r.s, vec![(1, 0)]);
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(matches!(
            PinskerInstance::new(2, 1, vec![0.5, 0.4], vec![0.5, 0.5]),
            Err(AnalysisError::InvalidMass { which: 'p', .. })
        ));
        assert!(matches!(
            PinskerInstance::new(2, 1, vec![0.5, 0.5], vec![1.5, -0.5]),
            Err(AnalysisError::InvalidMass { which: 'q', .. })
        ));
        assert!(matches!(
            PinskerInstance::new(2, 2, vec![1.0], vec![1.0]),
            Err(AnalysisError::GridShape { .. })
        ));
    }

    #[test]
    fn random_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let inst = PinskerInstance::random(8, &mut rng);
            PinskerInstance::new(inst.rows, inst.cols, inst.p.clone(), inst.q.clone()).unwrap();
        }
    }

    proptest! {
        #[test]
        fn inequality_holds_on_random_instances(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = PinskerInstance::random(8, &mut rng);
            let r = reverse_pinsker_check(&inst).unwrap();
            prop_assert!(r.holds, "p(S) = {} > 2 * {}", r.p_s, r.l1);
        }
    }
}
