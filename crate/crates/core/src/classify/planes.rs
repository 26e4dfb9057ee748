//! Two linear discriminant planes that sort characters into modifier,
//! basic and compound groups, trained with a pocket perceptron.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Modifier,
    Basic,
    Compound,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Modifier, Group::Basic, Group::Compound];

    pub fn as_str(&self) -> &'static str {
        match self {
            Group::Modifier => "modifier",
            Group::Basic => "basic",
            Group::Compound => "compound",
        }
    }
}

/// `weights . f - offset`; the sign is what matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub weights: [f64; 8],
    pub offset: f64,
}

impl Plane {
    pub fn score(&self, f: &[f64; 8]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>() - self.offset
    }

    pub fn scaled(&self, k: f64) -> Plane {
        Plane {
            weights: self.weights.map(|w| w * k),
            offset: self.offset * k,
        }
    }

    fn is_valid(&self) -> bool {
        self.offset.is_finite()
            && self.weights.iter().all(|w| w.is_finite())
            && (self.offset != 0.0 || self.weights.iter().any(|&w| w != 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantPlanes {
    /// Negative side: modifier.
    pub a: Plane,
    /// Negative side: basic; positive: compound.
    pub b: Plane,
}

impl DiscriminantPlanes {
    pub fn validate(&self) -> Result<()> {
        if self.a.is_valid() && self.b.is_valid() {
            Ok(())
        } else {
            Err(Error::Model("discriminant plane coefficients must be finite and not all zero".into()))
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        DiscriminantPlanes {
            a: self.a.scaled(k),
            b: self.b.scaled(k),
        }
    }
}

pub fn group_scalars(f: &[f64; 8], planes: &DiscriminantPlanes) -> Group {
    if planes.a.score(f) < 0.0 {
        Group::Modifier
    } else if planes.b.score(f) < 0.0 {
        Group::Basic
    } else {
        Group::Compound
    }
}

pub fn group_character(fv: &FeatureVector, planes: &DiscriminantPlanes) -> Group {
    group_scalars(&fv.scalars(), planes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceptronConfig {
    pub max_epochs: usize,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        PerceptronConfig { max_epochs: 10_000 }
    }
}

/// Outcome of fitting one plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub plane: Plane,
    pub epochs: usize,
    pub training_errors: usize,
}

/// Fits both planes on the eight scalar features.
///
/// Samples are first put in a canonical order, so the result does not
/// depend on the order they are passed in.
pub fn train_planes(
    samples: &[(FeatureVector, Group)],
    cfg: &PerceptronConfig,
) -> Result<DiscriminantPlanes> {
    let (planes, _, _) = train_planes_detailed(
        &samples.iter().map(|(fv, g)| (fv.scalars(), *g)).collect::<Vec<_>>(),
        cfg,
    )?;
    Ok(planes)
}

pub fn train_planes_detailed(
    samples: &[([f64; 8], Group)],
    cfg: &PerceptronConfig,
) -> Result<(DiscriminantPlanes, PlaneFit, PlaneFit)> {
    for g in Group::ALL {
        if !samples.iter().any(|(_, s)| *s == g) {
            return Err(Error::InsufficientData(format!("no {} samples", g.as_str())));
        }
    }
    let mut ordered = samples.to_vec();
    ordered.sort_by(|(fa, ga), (fb, gb)| {
        ga.cmp(gb).then_with(|| {
            fa.iter()
                .zip(fb)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    });

    let a_set: Vec<([f64; 8], bool)> = ordered
        .iter()
        .map(|(f, g)| (*f, *g != Group::Modifier))
        .collect();
    let b_set: Vec<([f64; 8], bool)> = ordered
        .iter()
        .filter(|(_, g)| *g != Group::Modifier)
        .map(|(f, g)| (*f, *g == Group::Compound))
        .collect();
    let fa = pocket_perceptron(&a_set, cfg.max_epochs);
    let fb = pocket_perceptron(&b_set, cfg.max_epochs);
    let planes = DiscriminantPlanes {
        a: fa.plane,
        b: fb.plane,
    };
    planes.validate()?;
    Ok((planes, fa, fb))
}

const MARGIN: f64 = 1.0;

fn count_errors(plane: &Plane, data: &[([f64; 8], bool)]) -> usize {
    data.iter()
        .filter(|(f, positive)| (plane.score(f) >= 0.0) != *positive)
        .count()
}

/// Perceptron on standardized features that also updates on samples inside
/// a unit margin. The plane with the fewest training errors seen at any
/// epoch end (latest on ties) is kept and mapped back to raw features.
fn pocket_perceptron(data: &[([f64; 8], bool)], max_epochs: usize) -> PlaneFit {
    let n = data.len() as f64;
    let mut mean = [0.0; 8];
    let mut sd = [0.0; 8];
    for (f, _) in data {
        for i in 0..8 {
            mean[i] += f[i] / n;
        }
    }
    for (f, _) in data {
        for i in 0..8 {
            sd[i] += (f[i] - mean[i]).powi(2) / n;
        }
    }
    // constant features would otherwise keep a rounding-noise spread
    for i in 0..8 {
        let first = data.first().map_or(0.0, |(f, _)| f[i]);
        if data.iter().all(|(f, _)| f[i] == first) {
            sd[i] = 0.0;
        }
    }
    let sd = sd.map(f64::sqrt);
    let z: Vec<([f64; 8], f64)> = data
        .iter()
        .map(|(f, positive)| {
            let mut v = [0.0; 8];
            for i in 0..8 {
                v[i] = if sd[i] > 0.0 { (f[i] - mean[i]) / sd[i] } else { 0.0 };
            }
            (v, if *positive { 1.0 } else { -1.0 })
        })
        .collect();

    let to_raw = |v: &[f64; 8], c: f64| {
        let mut weights = [0.0; 8];
        let mut offset = c;
        for i in 0..8 {
            if sd[i] > 0.0 {
                weights[i] = v[i] / sd[i];
                offset += weights[i] * mean[i];
            }
        }
        Plane { weights, offset }
    };

    let mut v = [0.0; 8];
    let mut c = 0.0;
    let mut best: Option<PlaneFit> = None;
    for epoch in 1..=max_epochs.max(1) {
        let mut updates = 0;
        for (x, y) in &z {
            let s = v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - c;
            if y * s <= MARGIN {
                updates += 1;
                for i in 0..8 {
                    v[i] += y * x[i];
                }
                c -= y;
            }
        }
        let plane = to_raw(&v, c);
        let errors = count_errors(&plane, data);
        if plane.is_valid() && best.is_none_or(|b| errors <= b.training_errors) {
            best = Some(PlaneFit {
                plane,
                epochs: epoch,
                training_errors: errors,
            });
        }
        if updates == 0 && plane.is_valid() {
            break;
        }
    }
    best.unwrap_or(PlaneFit {
        plane: to_raw(&v, c),
        epochs: max_epochs,
        training_errors: count_errors(&to_raw(&v, c), data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f1_only(v: f64) -> [f64; 8] {
        [v, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    }

    fn reference_planes() -> DiscriminantPlanes {
        DiscriminantPlanes {
            a: Plane {
                weights: [0.30, 0.21, 1.99, 0.5, -0.7, 0.1, 2.0, -1.0],
                offset: 225.77,
            },
            b: Plane {
                weights: [0.22, 0.49, 0.67, -0.3, 0.4, 1.2, -0.5, 0.9],
                offset: 80.83,
            },
        }
    }

    #[test]
    fn zero_features_fall_below_first_plane() {
        let planes = reference_planes();
        assert!((planes.a.score(&[0.0; 8]) + 225.77).abs() < 1e-12);
        assert_eq!(group_scalars(&[0.0; 8], &planes), Group::Modifier);
    }

    #[test]
    fn positive_scaling_keeps_groups() {
        let planes = reference_planes();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let f: [f64; 8] = std::array::from_fn(|_| rng.random_range(-500.0..500.0));
            let k = rng.random_range(1e-3..1e3);
            assert_eq!(group_scalars(&f, &planes), group_scalars(&f, &planes.scaled(k)));
        }
    }

    #[test]
    fn one_dimensional_thresholds() {
        let mut samples = Vec::new();
        for v in [0.5, 0.8] {
            samples.push((f1_only(v), Group::Modifier));
        }
        for v in [1.2, 1.5, 1.8] {
            samples.push((f1_only(v), Group::Basic));
        }
        for v in [2.2, 2.5] {
            samples.push((f1_only(v), Group::Compound));
        }
        let (planes, fa, fb) = train_planes_detailed(&samples, &PerceptronConfig::default()).unwrap();
        assert_eq!((fa.training_errors, fb.training_errors), (0, 0));
        // the crossing point on f1 lies between the classes
        let ta = planes.a.offset / planes.a.weights[0];
        let tb = planes.b.offset / planes.b.weights[0];
        assert!(planes.a.weights[0] > 0.0 && (0.8..1.2).contains(&ta), "ta = {ta}");
        assert!(planes.b.weights[0] > 0.0 && (1.8..2.2).contains(&tb), "tb = {tb}");
        for (f, g) in &samples {
            assert_eq!(group_scalars(f, &planes), *g);
        }
    }

    #[test]
    fn constant_features_get_zero_weight() {
        // 0.1 is inexact in binary, so a naive mean leaves a nonzero spread
        let samples: Vec<([f64; 8], Group)> = [(0.5, Group::Modifier), (1.5, Group::Basic), (2.5, Group::Compound)]
            .into_iter()
            .flat_map(|(v, g)| (0..7).map(move |_| ([v, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1], g)))
            .collect();
        let (planes, fa, fb) = train_planes_detailed(&samples, &PerceptronConfig::default()).unwrap();
        assert_eq!((fa.training_errors, fb.training_errors), (0, 0));
        for p in [planes.a, planes.b] {
            assert!(p.weights[1..].iter().all(|&w| w == 0.0), "{p:?}");
            assert!(p.offset.abs() < 1e3);
        }
    }

    #[test]
    fn contradictory_labels_hit_the_cap() {
        let samples = vec![
            (f1_only(1.0), Group::Modifier),
            (f1_only(1.0), Group::Basic),
            (f1_only(1.0), Group::Compound),
            (f1_only(2.0), Group::Basic),
        ];
        let cfg = PerceptronConfig { max_epochs: 50 };
        let (planes, fa, _) = train_planes_detailed(&samples, &cfg).unwrap();
        assert!(fa.training_errors > 0);
        planes.validate().unwrap();
    }

    #[test]
    fn order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut samples: Vec<([f64; 8], Group)> = (0..60)
            .map(|i| {
                let g = Group::ALL[i % 3];
                let f: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.0..1.0) + i as f64 % 3.0);
                (f, g)
            })
            .collect();
        let cfg = PerceptronConfig::default();
        let first = train_planes_detailed(&samples, &cfg).unwrap().0;
        samples.reverse();
        samples.swap(3, 17);
        assert_eq!(first, train_planes_detailed(&samples, &cfg).unwrap().0);
    }

    #[test]
    fn missing_group() {
        let samples = vec![(f1_only(1.0), Group::Basic), (f1_only(2.0), Group::Compound)];
        assert!(matches!(
            train_planes_detailed(&samples, &PerceptronConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
