//! The two reference filter banks with their known Wiener solutions and
//! adaptation settings.

use num_complex::Complex64;

use crate::algebra::{LaurentPoly, RationalMatrix, RationalTF};
use crate::error::Result;
use crate::harness::{Algorithm, ExperimentConfig, InputModel};
use crate::spectra::{FilterBankJson, FilterBankSpec};

/// Seed used by the presets unless overridden.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Two-band bank, `M = 2`, step 0.6, 11 taps, 2000 iterations.
    Exp1,
    /// Three-band bank, `M = 3`, step 0.45, 15 taps, 12000 iterations.
    Exp2,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Exp1, Preset::Exp2];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Exp1 => "exp1",
            Preset::Exp2 => "exp2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn decimation(self) -> usize {
        match self {
            Preset::Exp1 => 2,
            Preset::Exp2 => 3,
        }
    }

    pub fn taps(self) -> Vec<Vec<f64>> {
        match self {
            Preset::Exp1 => vec![vec![4.0, 7.0, 2.0], vec![3.0, -1.0, -1.5]],
            Preset::Exp2 => vec![
                vec![13.0, -3.0, 2.0, -5.0, -2.0],
                vec![1.0, -24.0, -5.0, 7.0],
                vec![-19.0, 5.0, 14.0, 1.0, -8.0],
            ],
        }
    }

    pub fn bank(self) -> FilterBankSpec {
        FilterBankSpec::from_taps(self.decimation(), &self.taps(), 0).expect("preset bank is valid")
    }

    pub fn step(self) -> f64 {
        match self {
            Preset::Exp1 => 0.6,
            Preset::Exp2 => 0.45,
        }
    }

    pub fn tap_len(self) -> usize {
        match self {
            Preset::Exp1 => 11,
            Preset::Exp2 => 15,
        }
    }

    pub fn iterations(self) -> usize {
        match self {
            Preset::Exp1 => 2000,
            Preset::Exp2 => 12000,
        }
    }

    /// Wiener filter for white input and `d = 0`, as numerators over a
    /// common denominator (both in powers of `z^-1`).
    pub fn expected_wiener(self) -> RationalMatrix {
        let (den, nums): (Vec<f64>, Vec<Vec<f64>>) = match self {
            Preset::Exp1 => (
                vec![50.0, -17.0],
                vec![vec![2.0], vec![14.0], vec![6.0, -3.0], vec![-8.0, -4.0]],
            ),
            Preset::Exp2 => (
                vec![2594.0, -642.0, -147.0],
                vec![
                    vec![155.5, 20.0],
                    vec![-26.0, -6.0],
                    vec![-31.5, -5.0],
                    vec![-40.5, 51.5],
                    vec![-110.0, 36.0],
                    vec![-33.5, 5.5],
                    vec![225.5, -25.5, 28.0],
                    vec![4.0, -82.0, 21.0],
                    vec![154.5, -71.5, -7.0],
                ],
            ),
        };
        let m = self.decimation();
        let den = LaurentPoly::from_real_z_inv(&den);
        let entries = nums
            .iter()
            .map(|n| RationalTF::new(LaurentPoly::from_real_z_inv(n), den.clone()))
            .collect::<Result<Vec<_>>>()
            .expect("nonzero denominator");
        RationalMatrix::new(m, m, entries).expect("square preset")
    }

    /// Poles of [`expected_wiener`](Self::expected_wiener).
    pub fn expected_poles(self) -> Vec<Complex64> {
        match self {
            Preset::Exp1 => vec![Complex64::new(0.34, 0.0)],
            Preset::Exp2 => {
                // 2594 z^2 - 642 z - 147
                let disc = (642.0f64 * 642.0 + 4.0 * 2594.0 * 147.0).sqrt();
                vec![
                    Complex64::new((642.0 + disc) / 5188.0, 0.0),
                    Complex64::new((642.0 - disc) / 5188.0, 0.0),
                ]
            }
        }
    }

    /// Unit-variance white input, NLMS with per-channel normalization.
    pub fn config(self, seed: u64) -> ExperimentConfig {
        let fb = self.bank();
        ExperimentConfig {
            bank: FilterBankJson {
                decimation: fb.decimation(),
                d: 0,
                filters: self.taps(),
            },
            input: InputModel::White { variance: 1.0 },
            seed,
            algorithm: Algorithm::Nlms,
            normalization: None,
            step: self.step(),
            tap_len: self.tap_len(),
            n_iters: self.iterations(),
            snapshots: vec![self.iterations()],
            d: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
        assert_eq!(Preset::from_name("exp3"), None);
    }

    #[test]
    fn expected_poles_are_denominator_roots() {
        for p in Preset::ALL {
            let den = p.expected_wiener().get(0, 0).den().clone();
            for r in p.expected_poles() {
                assert!(den.eval(r).norm() < 1e-9 * den.l1_norm());
            }
        }
    }

    #[test]
    fn configs_validate() {
        for p in Preset::ALL {
            p.config(DEFAULT_SEED).validate().unwrap();
        }
    }
}
