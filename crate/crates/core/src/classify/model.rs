//! Trained recognizer: discriminant planes plus one template tree per
//! group family, stored as versioned JSON.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureVector};
use super::planes::{group_character, train_planes_detailed, DiscriminantPlanes, Group, PerceptronConfig};
use super::template::{build_templates, template_match};
use super::tree::{default_tree, tree_classify, DecisionTree};
use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, Span};

pub const MODEL_VERSION: u32 = 1;
pub const REJECT: &str = "REJECT";
pub const DEFAULT_WIDTH_TOL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub samples: usize,
    pub plane_a_epochs: usize,
    pub plane_a_errors: usize,
    pub plane_b_epochs: usize,
    pub plane_b_errors: usize,
    pub templates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionModel {
    pub version: u32,
    pub planes: DiscriminantPlanes,
    /// Used for modifier and basic characters.
    pub basic_tree: DecisionTree,
    pub compound_tree: DecisionTree,
    pub alphabet: Vec<String>,
    pub metadata: TrainingSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recognition {
    pub label: String,
    pub group: Group,
    pub score: f64,
}

impl RecognitionModel {
    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                self.version
            )));
        }
        self.planes.validate()?;
        let alphabet: BTreeSet<&str> = self.alphabet.iter().map(String::as_str).collect();
        for tree in [&self.basic_tree, &self.compound_tree] {
            tree.validate()?;
            if let Some(t) = tree.templates().find(|t| !alphabet.contains(t.label.as_str())) {
                return Err(Error::Model(format!("template label {:?} missing from alphabet", t.label)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    fn tree_for(&self, group: Group) -> &DecisionTree {
        match group {
            Group::Modifier | Group::Basic => &self.basic_tree,
            Group::Compound => &self.compound_tree,
        }
    }
}

/// Groups the character, routes it through the matching tree and returns
/// the best template at the reached leaf, or [`REJECT`] with score 0.
///
/// `ch` shares row coordinates with its text line.
pub fn recognize_character(
    ch: &BinaryImage,
    matra: Span,
    baseline: usize,
    model: &RecognitionModel,
    width_tol: f64,
) -> Result<Recognition> {
    let fv = extract_features(ch, matra, baseline)?;
    Ok(recognize_with_features(&fv, ch, matra, model, width_tol))
}

pub fn recognize_with_features(
    fv: &FeatureVector,
    ch: &BinaryImage,
    matra: Span,
    model: &RecognitionModel,
    width_tol: f64,
) -> Recognition {
    let group = group_character(fv, &model.planes);
    let tree = model.tree_for(group);
    let leaf = tree_classify(fv, ch, matra, tree);
    match template_match(ch, tree.leaf_templates(leaf), width_tol) {
        Some(m) => Recognition {
            label: m.label,
            group,
            score: m.score,
        },
        None => Recognition {
            label: REJECT.to_string(),
            group,
            score: 0.0,
        },
    }
}

/// A labelled character cut from a text line; rows keep line coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub label: String,
    pub group: Group,
    pub image: BinaryImage,
    pub matra: Span,
    pub baseline: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub max_templates_per_label: usize,
    /// Tree skeletons to fill instead of the default width/headline tree.
    #[serde(default)]
    pub basic_tree: Option<DecisionTree>,
    #[serde(default)]
    pub compound_tree: Option<DecisionTree>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: PerceptronConfig::default().max_epochs,
            max_templates_per_label: 8,
            basic_tree: None,
            compound_tree: None,
        }
    }
}

/// Fits the planes, then files each sample's template under the tree leaf
/// it routes to. A sample goes to the tree of its labelled group and, when
/// the planes disagree, also to the tree of its predicted group. Empty
/// leaves are pruned.
pub fn train_model(samples: &[TrainingSample], cfg: &TrainConfig) -> Result<RecognitionModel> {
    let features = samples
        .iter()
        .map(|s| extract_features(&s.image, s.matra, s.baseline))
        .collect::<Result<Vec<_>>>()?;
    let scalars: Vec<([f64; 8], Group)> = features
        .iter()
        .zip(samples)
        .map(|(fv, s)| (fv.scalars(), s.group))
        .collect();
    let (planes, fit_a, fit_b) = train_planes_detailed(
        &scalars,
        &PerceptronConfig {
            max_epochs: cfg.max_epochs,
        },
    )?;

    let family = |g: Group| usize::from(g == Group::Compound);
    let mut members: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, (fv, s)) in features.iter().zip(samples).enumerate() {
        let truth = family(s.group);
        members[truth].push(i);
        let predicted = family(group_character(fv, &planes));
        if predicted != truth {
            members[predicted].push(i);
        }
    }

    let mut trees = Vec::with_capacity(2);
    for (k, skeleton) in [&cfg.basic_tree, &cfg.compound_tree].into_iter().enumerate() {
        let mut tree = match skeleton {
            Some(t) => {
                t.validate()?;
                t.clone()
            }
            None => default_tree(
                &members[k]
                    .iter()
                    .filter_map(|&i| samples[i].image.foreground_bbox().map(|b| b.w))
                    .collect::<Vec<_>>(),
            ),
        };
        let mut per_leaf: Vec<Vec<(String, BinaryImage)>> = vec![Vec::new(); tree.nodes.len()];
        for &i in &members[k] {
            let s = &samples[i];
            let leaf = tree_classify(&features[i], &s.image, s.matra, &tree);
            per_leaf[leaf].push((s.label.clone(), s.image.clone()));
        }
        for (node, list) in per_leaf.into_iter().enumerate() {
            if let Some(slot) = tree.leaf_templates_mut(node) {
                slot.clear();
                if !list.is_empty() {
                    *slot = build_templates(&list, cfg.max_templates_per_label)?;
                }
            }
        }
        trees.push(tree.prune_empty_leaves());
    }
    let compound_tree = trees.pop().expect("two trees");
    let basic_tree = trees.pop().expect("two trees");

    let alphabet: Vec<String> = samples
        .iter()
        .map(|s| s.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let templates = basic_tree.templates().count() + compound_tree.templates().count();
    let model = RecognitionModel {
        version: MODEL_VERSION,
        planes,
        basic_tree,
        compound_tree,
        alphabet,
        metadata: TrainingSummary {
            samples: samples.len(),
            plane_a_epochs: fit_a.epochs,
            plane_a_errors: fit_a.training_errors,
            plane_b_epochs: fit_b.epochs,
            plane_b_errors: fit_b.training_errors,
            templates,
        },
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: Span = Span { start: 0, end: 1 };
    const BASE: usize = 13;

    /// Headline plus a stem, with `extra` deciding further strokes; width
    /// drives the group.
    fn glyph(w: usize, extra: usize) -> BinaryImage {
        BinaryImage::from_fn(w, 14, |x, y| {
            y < 2 || x == 0 || (extra % 2 == 1 && y == 8) || (extra >= 2 && x == w - 1 && y > 6)
        })
    }

    fn sample(label: &str, group: Group, image: BinaryImage) -> TrainingSample {
        TrainingSample {
            label: label.into(),
            group,
            image,
            matra: M,
            baseline: BASE,
        }
    }

    fn toy_samples() -> Vec<TrainingSample> {
        vec![
            sample("m0", Group::Modifier, glyph(4, 0)),
            sample("m1", Group::Modifier, glyph(5, 1)),
            sample("b0", Group::Basic, glyph(10, 0)),
            sample("b1", Group::Basic, glyph(11, 1)),
            sample("b2", Group::Basic, glyph(12, 2)),
            sample("c0", Group::Compound, glyph(18, 1)),
            sample("c1", Group::Compound, glyph(19, 3)),
        ]
    }

    #[test]
    fn recognizes_own_training_samples() {
        let samples = toy_samples();
        let model = train_model(&samples, &TrainConfig::default()).unwrap();
        for s in &samples {
            let r = recognize_character(&s.image, M, BASE, &model, DEFAULT_WIDTH_TOL).unwrap();
            assert_eq!((r.label.as_str(), r.score), (s.label.as_str(), 1.0));
        }
    }

    #[test]
    fn one_template_model() {
        let mut model = train_model(&toy_samples(), &TrainConfig::default()).unwrap();
        let only = glyph(10, 0);
        let t = super::super::template::GlyphTemplate::from_glyph("only", &only).unwrap();
        model.alphabet = vec!["only".into()];
        model.basic_tree = DecisionTree::single_leaf(vec![t.clone()]);
        model.compound_tree = DecisionTree::single_leaf(vec![t]);
        model.validate().unwrap();
        let r = recognize_character(&only, M, BASE, &model, DEFAULT_WIDTH_TOL).unwrap();
        assert_eq!((r.label.as_str(), r.score), ("only", 1.0));
        // nothing within tolerance
        let r = recognize_character(&glyph(30, 0), M, BASE, &model, DEFAULT_WIDTH_TOL).unwrap();
        assert_eq!((r.label.as_str(), r.score), (REJECT, 0.0));
    }

    #[test]
    fn blank_input_is_an_error() {
        let model = train_model(&toy_samples(), &TrainConfig::default()).unwrap();
        let blank = BinaryImage::new(6, 14, false);
        assert!(matches!(
            recognize_character(&blank, M, BASE, &model, DEFAULT_WIDTH_TOL),
            Err(Error::BlankCharacter)
        ));
    }

    #[test]
    fn missing_group_is_insufficient() {
        let samples: Vec<_> = toy_samples().into_iter().filter(|s| s.group != Group::Compound).collect();
        assert!(matches!(
            train_model(&samples, &TrainConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let a = train_model(&toy_samples(), &TrainConfig::default()).unwrap();
        let b = train_model(&toy_samples(), &TrainConfig::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let back = RecognitionModel::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        a.save(&path).unwrap();
        assert_eq!(RecognitionModel::load(&path).unwrap(), a);
    }

    #[test]
    fn validation_catches_unknown_labels_and_versions() {
        let mut m = train_model(&toy_samples(), &TrainConfig::default()).unwrap();
        m.alphabet.retain(|l| l != "b0");
        assert!(m.validate().is_err());
        let mut m = train_model(&toy_samples(), &TrainConfig::default()).unwrap();
        m.version = 2;
        assert!(matches!(m.validate(), Err(Error::Model(_))));
    }
}
