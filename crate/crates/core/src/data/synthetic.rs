//! Three-class rule system over two continuous and two discrete inputs.

use std::sync::Arc;

use rand::Rng as _;

use super::{Column, Dataset, FeatureSchema, FeatureSpec};
use crate::error::{Error, Result};
use crate::rng::derive_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Blue = 0,
    White = 1,
    Red = 2,
}

impl Color {
    pub fn from_index(i: u32) -> Option<Color> {
        match i {
            0 => Some(Color::Blue),
            1 => Some(Color::White),
            2 => Some(Color::Red),
            _ => None,
        }
    }
}

pub fn synthetic_schema() -> FeatureSchema {
    FeatureSchema::new(
        "synthetic",
        vec![
            FeatureSpec::continuous("x1"),
            FeatureSpec::continuous("x2"),
            FeatureSpec::categorical("x3", ["0", "1"]),
            FeatureSpec::categorical("x4", ["blue", "white", "red"]),
        ],
        "y",
        vec!["0".into(), "1".into(), "2".into()],
    )
    .expect("static schema is valid")
}

/// Class of a point under the generating rule system.
///
/// Evaluated as the generating decision tree: colour first, then the
/// `x1 >= 0.7` split for blue/white, then `x3` and `x2`. This makes the map
/// total and resolves the boundary point `x1 = 0.7` (claimed both by the
/// blue `x1 <= 0.7` clause and by the `x1 >= 0.7` clauses) in favour of
/// the `x1 >= 0.7` branch.
pub fn label_synthetic(x1: f64, x2: f64, x3: u8, x4: Color) -> Result<usize> {
    if !(0.0..=1.0).contains(&x1) || !(0.0..=1.0).contains(&x2) {
        return Err(Error::Data(format!("synthetic inputs outside [0, 1]: x1={x1}, x2={x2}")));
    }
    if x3 > 1 {
        return Err(Error::Data(format!("x3 must be 0 or 1, got {x3}")));
    }
    Ok(match x4 {
        Color::Red => {
            if x3 == 1 || x2 <= 0.5 {
                0
            } else {
                1
            }
        }
        Color::Blue | Color::White if x1 >= 0.7 => {
            if x3 == 1 {
                2
            } else if x2 > 0.2 {
                0
            } else {
                1
            }
        }
        Color::White => {
            if x1 <= 0.5 {
                1
            } else {
                0
            }
        }
        Color::Blue => 0,
    })
}

/// Samples `n` points uniformly over the input domain, labels them, then
/// flips each label with probability `noise_rate` to a uniformly chosen
/// different class.
pub fn generate_synthetic(n: usize, noise_rate: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("synthetic sample count must be positive".into()));
    }
    if !(0.0..1.0).contains(&noise_rate) {
        return Err(Error::Config(format!("noise rate must lie in [0, 1), got {noise_rate}")));
    }
    let mut rng = derive_rng(seed, "synthetic", &[]);
    let (mut x1, mut x2, mut x3, mut x4, mut y) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for _ in 0..n {
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        let c: u8 = rng.gen_range(0..2);
        let d = Color::from_index(rng.gen_range(0..3)).unwrap();
        let mut label = label_synthetic(a, b, c, d)?;
        if rng.gen_bool(noise_rate) {
            let shift = rng.gen_range(1..3);
            label = (label + shift) % 3;
        }
        x1.push(Some(a));
        x2.push(Some(b));
        x3.push(Some(u32::from(c)));
        x4.push(Some(d as u32));
        y.push(label);
    }
    Dataset::new(
        Arc::new(synthetic_schema()),
        vec![
            Column::Continuous(x1),
            Column::Continuous(x2),
            Column::Categorical(x3),
            Column::Categorical(x4),
        ],
        y,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relabel(ds: &Dataset) -> Vec<usize> {
        let (Column::Categorical(x3), Column::Categorical(x4)) = (ds.column(2), ds.column(3)) else {
            unreachable!()
        };
        (0..ds.n_samples())
            .map(|i| {
                label_synthetic(
                    ds.continuous(0, i).unwrap(),
                    ds.continuous(1, i).unwrap(),
                    x3[i].unwrap() as u8,
                    Color::from_index(x4[i].unwrap()).unwrap(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn labeling_clauses() {
        assert_eq!(label_synthetic(0.1, 0.9, 1, Color::Red).unwrap(), 0);
        assert_eq!(label_synthetic(0.3, 0.8, 0, Color::Red).unwrap(), 1);
        assert_eq!(label_synthetic(0.3, 0.4, 0, Color::Red).unwrap(), 0);
        assert_eq!(label_synthetic(0.9, 0.5, 1, Color::Blue).unwrap(), 2);
        assert_eq!(label_synthetic(0.9, 0.5, 1, Color::White).unwrap(), 2);
        assert_eq!(label_synthetic(0.8, 0.3, 0, Color::White).unwrap(), 0);
        assert_eq!(label_synthetic(0.8, 0.1, 0, Color::Blue).unwrap(), 1);
        assert_eq!(label_synthetic(0.6, 0.1, 1, Color::White).unwrap(), 0);
        assert_eq!(label_synthetic(0.4, 0.9, 1, Color::White).unwrap(), 1);
        assert_eq!(label_synthetic(0.2, 0.9, 1, Color::Blue).unwrap(), 0);
        assert!(label_synthetic(1.2, 0.5, 0, Color::Blue).is_err());
        assert!(label_synthetic(0.2, 0.5, 2, Color::Blue).is_err());
    }

    #[test]
    fn noiseless_labels_follow_the_rules() {
        let ds = generate_synthetic(500, 0.0, 3).unwrap();
        assert_eq!(relabel(&ds), ds.labels());
    }

    #[test]
    fn noise_fraction_near_target() {
        for seed in 0..5 {
            let ds = generate_synthetic(500, 0.12, seed).unwrap();
            let wrong = relabel(&ds).iter().zip(ds.labels()).filter(|(a, b)| a != b).count();
            let frac = wrong as f64 / 500.0;
            assert!((0.07..=0.17).contains(&frac), "seed {seed}: {frac}");
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        assert_eq!(generate_synthetic(50, 0.1, 9).unwrap(), generate_synthetic(50, 0.1, 9).unwrap());
        assert_ne!(generate_synthetic(50, 0.1, 9).unwrap(), generate_synthetic(50, 0.1, 10).unwrap());
        assert!(generate_synthetic(10, 1.0, 1).is_err());
        assert!(generate_synthetic(0, 0.0, 1).is_err());
    }
}
