//! Deterministic, splittable random streams.
//!
//! Every stream is a xoshiro256++ generator whose 256-bit state is filled
//! from a 64-bit seed by SplitMix64, exactly as in the reference C code of
//! Blackman and Vigna. Replicate streams are derived from a master seed with
//! the SplitMix64 finalizer, so any replicate can be regenerated on its own
//! and results never depend on scheduling.

use std::fmt;
use std::str::FromStr;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Identifier of the generator behind [`RngState`], echoed in reports.
pub const RNG_ALGORITHM: &str = "xoshiro256++/splitmix64";

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed from which every replicate stream of an experiment is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MasterSeed(pub u64);

impl FromStr for MasterSeed {
    type Err = Error;

    /// Accepts decimal (`42`) or hexadecimal (`0x2a`) notation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
            None => t.replace('_', "").parse::<u64>(),
        };
        parsed
            .map(MasterSeed)
            .map_err(|e| Error::param("seed", format!("`{s}`: {e}")))
    }
}

impl fmt::Display for MasterSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// SplitMix64 output function (Stafford variant 13).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Single-owner generator state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    inner: Xoshiro256PlusPlus,
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1): `(k + 1/2) 2^-53` for a 53-bit `k`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by the Box-Muller cosine branch (two uniforms per draw).
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Exponential with unit mean by inversion.
    #[inline]
    pub fn standard_exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }
}

/// Stream for replicate `index` of an experiment seeded by `master`.
pub fn replicate_seed(master: MasterSeed, index: u64) -> RngState {
    let derived = mix64(master.0 ^ mix64(index.wrapping_add(GOLDEN_GAMMA)));
    RngState::from_seed(derived)
}

/// Centered innovation laws for the linear and ARFIMA generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum InnovationDist {
    #[default]
    StdNormal,
    /// Uniform on (-0.5, 0.5).
    Uniform,
    /// chi-square with two degrees of freedom, minus its mean 2.
    CenteredChiSq2,
}

impl InnovationDist {
    pub const NAMES: [&'static str; 3] = ["normal", "uniform", "chisq2"];

    pub fn name(&self) -> &'static str {
        match self {
            InnovationDist::StdNormal => "normal",
            InnovationDist::Uniform => "uniform",
            InnovationDist::CenteredChiSq2 => "chisq2",
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            InnovationDist::StdNormal => 1.0,
            InnovationDist::Uniform => 1.0 / 12.0,
            InnovationDist::CenteredChiSq2 => 4.0,
        }
    }
}

impl FromStr for InnovationDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" | "std-normal" => Ok(InnovationDist::StdNormal),
            "uniform" => Ok(InnovationDist::Uniform),
            "chisq2" | "chi2" | "centered-chisq2" => Ok(InnovationDist::CenteredChiSq2),
            _ => Err(Error::UnknownName {
                kind: "innovation",
                name: s.to_string(),
                available: Self::NAMES.join(", "),
            }),
        }
    }
}

/// One exact draw from `dist`.
#[inline]
pub fn draw_innovation(dist: InnovationDist, rng: &mut RngState) -> f64 {
    match dist {
        InnovationDist::StdNormal => rng.standard_normal(),
        InnovationDist::Uniform => rng.uniform_open() - 0.5,
        // chi-square(2) is exponential with mean 2.
        InnovationDist::CenteredChiSq2 => 2.0 * rng.standard_exponential() - 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{mean_and_variance, normal_cdf};

    // Produced by the reference xoshiro256plusplus.c seeded through
    // splitmix64.c (state words s[0..4] = four successive splitmix outputs).
    const VECTORS: [(u64, [u64; 5]); 3] = [
        (
            0,
            [
                5987356902031041503,
                7051070477665621255,
                6633766593972829180,
                211316841551650330,
                9136120204379184874,
            ],
        ),
        (
            1,
            [
                14971601782005023387,
                13781649495232077965,
                1847458086238483744,
                13765271635752736470,
                3406718355780431780,
            ],
        ),
        (
            20161203,
            [
                12208667912777846718,
                11901335171586517833,
                14524977777575430204,
                15485862076927513249,
                15267243354181876268,
            ],
        ),
    ];

    #[test]
    fn matches_reference_vectors() {
        for (seed, expected) in VECTORS {
            let mut rng = RngState::from_seed(seed);
            let got: Vec<u64> = (0..5).map(|_| rng.next_u64()).collect();
            assert_eq!(got, expected, "seed {seed}");
        }
    }

    #[test]
    fn seed_parsing() {
        assert_eq!("42".parse::<MasterSeed>().unwrap(), MasterSeed(42));
        assert_eq!("0x2A".parse::<MasterSeed>().unwrap(), MasterSeed(42));
        assert_eq!(
            "0xffff_ffff_ffff_ffff".parse::<MasterSeed>().unwrap(),
            MasterSeed(u64::MAX)
        );
        assert!("-1".parse::<MasterSeed>().is_err());
        assert!("0xzz".parse::<MasterSeed>().is_err());
    }

    #[test]
    fn replicate_seed_is_deterministic() {
        let a = replicate_seed(MasterSeed(9), 17).next_u64();
        let b = replicate_seed(MasterSeed(9), 17).next_u64();
        assert_eq!(a, b);
    }

    #[test]
    fn replicate_streams_differ_by_index_and_master() {
        let s = MasterSeed(0xdead_beef);
        let firsts: Vec<u64> = (0..1000).map(|i| replicate_seed(s, i).next_u64()).collect();
        let mut sorted = firsts.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 1000);

        for seed in 0..1000u64 {
            let a = replicate_seed(MasterSeed(seed), 0).next_u64();
            let b = replicate_seed(MasterSeed(seed + 1), 0).next_u64();
            assert_ne!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn streams_are_uncorrelated() {
        let master = MasterSeed(123);
        let mut a = replicate_seed(master, 3);
        let mut b = replicate_seed(master, 4);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| a.standard_normal()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.standard_normal()).collect();
        let (mx, vx) = mean_and_variance(&xs);
        let (my, vy) = mean_and_variance(&ys);
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (n - 1) as f64;
        assert!((cov / (vx * vy).sqrt()).abs() < 0.03);
    }

    #[test]
    fn uniform_open_stays_inside() {
        let mut rng = RngState::from_seed(5);
        for _ in 0..100_000 {
            let u = rng.uniform_open();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn centered_chisq2_moments() {
        let mut rng = RngState::from_seed(11);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| draw_innovation(InnovationDist::CenteredChiSq2, &mut rng))
            .collect();
        let (m, v) = mean_and_variance(&draws);
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((v - 4.0).abs() < 0.1, "var {v}");
    }

    #[test]
    fn uniform_innovation_support_and_variance() {
        let mut rng = RngState::from_seed(12);
        let draws: Vec<f64> = (0..200_000)
            .map(|_| draw_innovation(InnovationDist::Uniform, &mut rng))
            .collect();
        assert!(draws.iter().all(|&u| u > -0.5 && u < 0.5));
        let (_, v) = mean_and_variance(&draws);
        assert!((v - 1.0 / 12.0).abs() < 0.002, "var {v}");
    }

    #[test]
    fn normal_innovation_passes_ks() {
        let mut rng = RngState::from_seed(13);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| draw_innovation(InnovationDist::StdNormal, &mut rng))
            .collect();
        draws.sort_by(f64::total_cmp);
        let d = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = normal_cdf(x);
                (c - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - c)
            })
            .fold(0.0, f64::max);
        assert!(d < 1.95 / (n as f64).sqrt() * 1.5, "KS {d}");
    }

    #[test]
    fn innovation_names_round_trip() {
        for name in InnovationDist::NAMES {
            assert_eq!(name.parse::<InnovationDist>().unwrap().name(), name);
        }
        assert!("cauchy".parse::<InnovationDist>().is_err());
    }
}
