use serde::{Deserialize, Serialize};

use super::sampling::ln_binomial;
use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingParams {
    pub n_i: u64,
    pub d_prime: u32,
    pub word_bits: u32,
    pub client_bits: u64,
    /// `|T_i|`.
    pub sample_cells: u64,
    /// Cells written by epochs newer than `i`.
    pub newer_cells: u64,
    /// Points that land in the neighborhood of the resolved queries.
    pub f: u64,
    /// Size of that neighborhood.
    pub gamma_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Points outside the neighborhood are coded against its complement.
    Extract,
    /// Points inside are coded by index, the rest in full.
    Weak,
}

/// Message lengths in bits, as base-2 reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingLengths {
    pub case0_bits: f64,
    pub case1_bits: f64,
    pub entropy_floor: f64,
}

pub fn encoding_lengths(
    params: &EncodingParams,
    branch: Branch,
) -> Result<EncodingLengths, AnalysisError> {
    let EncodingParams {
        n_i,
        d_prime,
        word_bits,
        client_bits,
        sample_cells,
        newer_cells,
        f,
        gamma_size,
    } = *params;
    if f > n_i {
        return Err(AnalysisError::TooManyReported { f, n: n_i });
    }
    let d = f64::from(d_prime);
    let n = n_i as f64;
    let fr = f as f64;
    let log_n = if n_i == 0 { 0.0 } else { n.log2() };
    let header =
        1.0 + 2.0 * f64::from(word_bits) * (sample_cells + newer_cells) as f64 + client_bits as f64;
    let case1_bits = match branch {
        Branch::Extract => {
            let cube = 2f64.powi(d_prime as i32);
            if gamma_size as f64 >= cube {
                return Err(AnalysisError::GammaTooLarge {
                    gamma: gamma_size,
                    d_prime,
                });
            }
            let choose = ln_binomial(n_i, f) / std::f64::consts::LN_2;
            header + log_n + choose + fr * d + (n - fr) * (cube - gamma_size as f64).log2()
        }
        Branch::Weak => header + n + (n - fr) * d + fr * log_n,
    };
    Ok(EncodingLengths {
        case0_bits: 1.0 + n * d,
        case1_bits,
        entropy_floor: n * d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n_i: u64, d_prime: u32, f: u64) -> EncodingParams {
        EncodingParams {
            n_i,
            d_prime,
            word_bits: 0,
            client_bits: 0,
            sample_cells: 0,
            newer_cells: 0,
            f,
            gamma_size: 0,
        }
    }

    #[test]
    fn weak_branch_without_reports_saves_nothing() {
        let p = EncodingParams {
            word_bits: 8,
            client_bits: 5,
            sample_cells: 3,
            newer_cells: 4,
            ..params(64, 10, 0)
        };
        let e = encoding_lengths(&p, Branch::Weak).unwrap();
        assert_eq!(e.case1_bits, 1.0 + 2.0 * 8.0 * 7.0 + 5.0 + 64.0 + 640.0);
        assert_eq!(e.case0_bits, 641.0);
        assert_eq!(e.entropy_floor, 640.0);
    }

    #[test]
    fn weak_branch_with_everything_reported_beats_the_floor() {
        // d' = 9 > log2(64) + 2.
        let e = encoding_lengths(&params(64, 9, 64), Branch::Weak).unwrap();
        assert_eq!(e.case1_bits, 1.0 + 64.0 + 64.0 * 6.0);
        assert!(e.case1_bits < e.entropy_floor);
        // 1 + n + n log2 n = 449 exceeds 64 * 7.
        let e = encoding_lengths(&params(64, 7, 64), Branch::Weak).unwrap();
        assert!(e.case1_bits >= e.entropy_floor);
    }

    #[test]
    fn half_cube_neighborhood_saves_one_bit_per_outside_point() {
        let base = encoding_lengths(&params(32, 10, 0), Branch::Extract).unwrap();
        let half = encoding_lengths(
            &EncodingParams {
                gamma_size: 512,
                ..params(32, 10, 0)
            },
            Branch::Extract,
        )
        .unwrap();
        assert!((base.case1_bits - half.case1_bits - 32.0).abs() < 1e-9);
        assert!((half.case1_bits - (1.0 + 5.0 + 32.0 * 9.0)).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert_eq!(
            encoding_lengths(
                &EncodingParams {
                    gamma_size: 1024,
                    ..params(4, 10, 0)
                },
                Branch::Extract
            )
            .unwrap_err(),
            AnalysisError::GammaTooLarge {
                gamma: 1024,
                d_prime: 10
            }
        );
        assert_eq!(
            encoding_lengths(&params(4, 10, 5), Branch::Weak).unwrap_err(),
            AnalysisError::TooManyReported { f: 5, n: 4 }
        );
    }

    proptest! {
        #[test]
        fn case0_ignores_f(n in 1u64..500, d in 1u32..30, f1 in 0u64..500, f2 in 0u64..500, branch in prop_oneof![Just(Branch::Weak), Just(Branch::Extract)]) {
            let (f1, f2) = (f1.min(n), f2.min(n));
            let a = encoding_lengths(&params(n, d, f1), branch).unwrap();
            let b = encoding_lengths(&params(n, d, f2), branch).unwrap();
            prop_assert_eq!(a.case0_bits, b.case0_bits);
            prop_assert_eq!(a.entropy_floor, b.entropy_floor);
        }

        #[test]
        fn overhead_terms_only_add(n in 1u64..200, d in 1u32..20, f in 0u64..200, s in 0u64..50, newer in 0u64..50, m in 0u64..50, w in 1u32..64, branch in prop_oneof![Just(Branch::Weak), Just(Branch::Extract)]) {
            let f = f.min(n);
            let bare = encoding_lengths(&params(n, d, f), branch).unwrap();
            let full = EncodingParams { word_bits: w, client_bits: m, sample_cells: s, newer_cells: newer, ..params(n, d, f) };
            let full = encoding_lengths(&full, branch).unwrap();
            let expected = 2.0 * f64::from(w) * (s + newer) as f64 + m as f64;
            prop_assert!((full.case1_bits - bare.case1_bits - expected).abs() < 1e-6 * full.case1_bits.max(1.0));
        }

        #[test]
        fn weak_cost_grows_with_unreported_points(n in 2u64..200, d in 1u32..20, f in 1u64..200) {
            // Moving a point from reported to unreported costs d' - log2 n_i bits.
            let f = f.min(n);
            let a = encoding_lengths(&params(n, d, f), Branch::Weak).unwrap();
            let b = encoding_lengths(&params(n, d, f - 1), Branch::Weak).unwrap();
            let delta = f64::from(d) - (n as f64).log2();
            prop_assert!((b.case1_bits - a.case1_bits - delta).abs() < 1e-9 * a.case1_bits.max(1.0));
        }
    }
}
