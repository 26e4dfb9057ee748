//! Character features, grouping and template recognition.

pub mod features;
pub mod model;
pub mod planes;
pub mod template;
pub mod tree;

pub use features::{contour_directional, extract_features, Direction, FeatureVector};
pub use model::{recognize_character, train_model, Recognition, RecognitionModel, TrainConfig, TrainingSample, REJECT};
pub use planes::{group_character, train_planes, DiscriminantPlanes, Group, Plane};
pub use template::{build_templates, template_match, GlyphTemplate};
pub use tree::{tree_classify, DecisionTree, TreeNode, TreeTest};
