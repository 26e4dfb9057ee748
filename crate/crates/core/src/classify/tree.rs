//! Binary feature tree that narrows a character down to a small template
//! list before matching.

use serde::{Deserialize, Serialize};

use super::features::{Direction, FeatureVector, GRID};
use super::template::GlyphTemplate;
use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, Span};

pub const DEFAULT_HEADLINE_THRESHOLD: f64 = 0.6;
pub const DEFAULT_VERTICAL_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeTest {
    /// `f5 >= threshold` (default 0.6).
    HeadLine,
    /// `f7a >= threshold` (default 0.7).
    VerticalLine,
    /// Diagonal-135 contour mass beats every other direction in the leftmost
    /// grid column.
    LeftSlant,
    /// Ink bounding-box width `>= threshold` pixels; threshold required.
    BboxWidth,
    /// Any ink above the headline.
    UpperSignature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        id: usize,
        test: TreeTest,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        yes: usize,
        no: usize,
    },
    Leaf {
        id: usize,
        templates: Vec<GlyphTemplate>,
    },
}

impl TreeNode {
    pub fn id(&self) -> usize {
        match self {
            TreeNode::Internal { id, .. } | TreeNode::Leaf { id, .. } => *id,
        }
    }
}

/// Nodes are stored so that `nodes[i].id() == i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: usize,
    pub nodes: Vec<TreeNode>,
}

/// Everything a tree test may look at.
pub struct RouteInput<'a> {
    pub fv: &'a FeatureVector,
    pub ch: &'a BinaryImage,
    pub matra: Span,
}

fn evaluate(test: TreeTest, threshold: Option<f64>, x: &RouteInput) -> bool {
    match test {
        TreeTest::HeadLine => x.fv.f5 >= threshold.unwrap_or(DEFAULT_HEADLINE_THRESHOLD),
        TreeTest::VerticalLine => x.fv.f7a >= threshold.unwrap_or(DEFAULT_VERTICAL_THRESHOLD),
        TreeTest::LeftSlant => {
            let mass = |d: Direction| (0..GRID).map(|cy| x.fv.contour_bin(0, cy, d)).sum::<f64>();
            let slant = mass(Direction::Diagonal135);
            [Direction::Horizontal, Direction::Vertical, Direction::Diagonal45]
                .into_iter()
                .all(|d| slant > mass(d))
        }
        TreeTest::BboxWidth => {
            let w = x.ch.foreground_bbox().map_or(0, |b| b.w) as f64;
            w >= threshold.unwrap_or(f64::INFINITY)
        }
        TreeTest::UpperSignature => (0..x.matra.start.min(x.ch.height()))
            .any(|y| x.ch.row(y).iter().any(|&p| p)),
    }
}

impl DecisionTree {
    pub fn single_leaf(templates: Vec<GlyphTemplate>) -> Self {
        DecisionTree {
            root: 0,
            nodes: vec![TreeNode::Leaf { id: 0, templates }],
        }
    }

    /// Checks ids, child references, thresholds, and that every node is
    /// reached exactly once from the root.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(format!("decision tree: {m}")));
        let n = self.nodes.len();
        if self.root >= n {
            return bad(format!("root {} out of range", self.root));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id() != i {
                return bad(format!("node at position {i} has id {}", node.id()));
            }
            if let TreeNode::Internal { test, threshold, yes, no, .. } = node {
                if *yes >= n || *no >= n {
                    return bad(format!("node {i} has a dangling child"));
                }
                match (test, threshold) {
                    (TreeTest::BboxWidth, None) => return bad(format!("node {i} needs a width threshold")),
                    (_, Some(t)) if !t.is_finite() => return bad(format!("node {i} threshold not finite")),
                    _ => {}
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return bad(format!("node {i} reached twice"));
            }
            if let TreeNode::Internal { yes, no, .. } = &self.nodes[i] {
                stack.push(*no);
                stack.push(*yes);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return bad(format!("node {i} unreachable"));
        }
        for node in &self.nodes {
            if let TreeNode::Leaf { templates, .. } = node {
                for t in templates {
                    t.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn route(&self, x: &RouteInput) -> usize {
        let mut i = self.root;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { id, .. } => return *id,
                TreeNode::Internal { test, threshold, yes, no, .. } => {
                    i = if evaluate(*test, *threshold, x) { *yes } else { *no };
                }
            }
        }
    }

    pub fn leaf_templates(&self, id: usize) -> &[GlyphTemplate] {
        match self.nodes.get(id) {
            Some(TreeNode::Leaf { templates, .. }) => templates,
            _ => &[],
        }
    }

    pub fn leaf_templates_mut(&mut self, id: usize) -> Option<&mut Vec<GlyphTemplate>> {
        match self.nodes.get_mut(id) {
            Some(TreeNode::Leaf { templates, .. }) => Some(templates),
            _ => None,
        }
    }

    pub fn templates(&self) -> impl Iterator<Item = &GlyphTemplate> {
        self.nodes.iter().flat_map(|n| match n {
            TreeNode::Leaf { templates, .. } => templates.as_slice(),
            TreeNode::Internal { .. } => &[],
        })
    }

    /// Replaces every internal node that has an empty-leaf child by its
    /// other child, then renumbers nodes in depth-first order.
    pub fn prune_empty_leaves(&self) -> Self {
        fn rebuild(tree: &DecisionTree, i: usize, out: &mut Vec<TreeNode>) -> Option<usize> {
            match &tree.nodes[i] {
                TreeNode::Leaf { templates, .. } => {
                    if templates.is_empty() {
                        return None;
                    }
                    out.push(TreeNode::Leaf {
                        id: out.len(),
                        templates: templates.clone(),
                    });
                    Some(out.len() - 1)
                }
                TreeNode::Internal { test, threshold, yes, no, .. } => {
                    let at = out.len();
                    out.push(TreeNode::Leaf { id: at, templates: Vec::new() });
                    let y = rebuild(tree, *yes, out);
                    let n = rebuild(tree, *no, out);
                    match (y, n) {
                        (Some(y), Some(n)) => {
                            out[at] = TreeNode::Internal {
                                id: at,
                                test: *test,
                                threshold: *threshold,
                                yes: y,
                                no: n,
                            };
                            Some(at)
                        }
                        (one, other) => {
                            // drop the placeholder and shift the kept subtree up
                            out.remove(at);
                            let kept = one.or(other)?;
                            for node in &mut out[at..] {
                                shift(node);
                            }
                            Some(kept - 1)
                        }
                    }
                }
            }
        }
        fn shift(node: &mut TreeNode) {
            match node {
                TreeNode::Leaf { id, .. } => *id -= 1,
                TreeNode::Internal { id, yes, no, .. } => {
                    *id -= 1;
                    *yes -= 1;
                    *no -= 1;
                }
            }
        }
        let mut nodes = Vec::new();
        match rebuild(self, self.root, &mut nodes) {
            Some(root) => DecisionTree { root, nodes },
            None => DecisionTree::single_leaf(Vec::new()),
        }
    }
}

pub fn tree_classify(fv: &FeatureVector, ch: &BinaryImage, matra: Span, tree: &DecisionTree) -> usize {
    tree.route(&RouteInput { fv, ch, matra })
}

/// Width split at the midpoint of the widest gap between observed widths,
/// with a headline test under each side. Leaves start empty.
pub fn default_tree(widths: &[usize]) -> DecisionTree {
    let mut ws = widths.to_vec();
    ws.sort_unstable();
    ws.dedup();
    let threshold = ws
        .windows(2)
        .max_by_key(|p| (p[1] - p[0], std::cmp::Reverse(p[0])))
        .map_or(ws.first().copied().unwrap_or(1) as f64, |p| (p[0] + p[1]) as f64 / 2.0);
    let leaf = |id| TreeNode::Leaf { id, templates: Vec::new() };
    let headline = |id, yes, no| TreeNode::Internal {
        id,
        test: TreeTest::HeadLine,
        threshold: None,
        yes,
        no,
    };
    DecisionTree {
        root: 0,
        nodes: vec![
            TreeNode::Internal {
                id: 0,
                test: TreeTest::BboxWidth,
                threshold: Some(threshold),
                yes: 1,
                no: 4,
            },
            headline(1, 2, 3),
            leaf(2),
            leaf(3),
            headline(4, 5, 6),
            leaf(5),
            leaf(6),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::features::extract_features;

    fn template(label: &str, w: usize) -> GlyphTemplate {
        GlyphTemplate::from_glyph(label, &BinaryImage::new(w, 3, true)).unwrap()
    }

    fn glyph(w: usize) -> BinaryImage {
        // headline over rows 0..=1 and a stem on the left
        BinaryImage::from_fn(w, 12, |x, y| y < 2 || x == 0)
    }

    const M: Span = Span { start: 0, end: 1 };

    #[test]
    fn single_leaf_routes_everything() {
        let tree = DecisionTree::single_leaf(vec![template("a", 3)]);
        tree.validate().unwrap();
        for w in [1, 5, 17] {
            let g = glyph(w);
            let fv = extract_features(&g, M, 11).unwrap();
            assert_eq!(tree_classify(&fv, &g, M, &tree), 0);
        }
    }

    #[test]
    fn width_root() {
        let tree = DecisionTree {
            root: 0,
            nodes: vec![
                TreeNode::Internal { id: 0, test: TreeTest::BboxWidth, threshold: Some(10.0), yes: 1, no: 2 },
                TreeNode::Leaf { id: 1, templates: vec![template("wide", 12)] },
                TreeNode::Leaf { id: 2, templates: vec![template("narrow", 4)] },
            ],
        };
        tree.validate().unwrap();
        let g = glyph(12);
        let fv = extract_features(&g, M, 11).unwrap();
        assert_eq!(tree_classify(&fv, &g, M, &tree), 1);
        let g = glyph(9);
        let fv = extract_features(&g, M, 11).unwrap();
        assert_eq!(tree_classify(&fv, &g, M, &tree), 2);
    }

    #[test]
    fn depth_three_manual_trace() {
        // 0: width >= 8 ? 1 : 2
        // 1: upper signature ? 3 : 4
        // 4: vertical line ? 5 : 6
        let leaf = |id| TreeNode::Leaf { id, templates: vec![template("t", 3)] };
        let tree = DecisionTree {
            root: 0,
            nodes: vec![
                TreeNode::Internal { id: 0, test: TreeTest::BboxWidth, threshold: Some(8.0), yes: 1, no: 2 },
                TreeNode::Internal { id: 1, test: TreeTest::UpperSignature, threshold: None, yes: 3, no: 4 },
                leaf(2),
                leaf(3),
                TreeNode::Internal { id: 4, test: TreeTest::VerticalLine, threshold: None, yes: 5, no: 6 },
                leaf(5),
                leaf(6),
            ],
        };
        tree.validate().unwrap();
        let m = Span::new(2, 3);
        // 10 wide, no ink above row 2, left stem runs rows 2..=13 of 14 -> f7a = 12/12
        let stem = BinaryImage::from_fn(10, 14, |x, y| (2..=3).contains(&y) || (x == 0 && y >= 2));
        let fv = extract_features(&stem, m, 13).unwrap();
        assert_eq!(tree_classify(&fv, &stem, m, &tree), 5);
        // same but with a mark above the headline: ends at leaf 3
        let mut marked = stem.clone();
        marked.set(5, 0, true);
        let fv = extract_features(&marked, m, 13).unwrap();
        assert_eq!(tree_classify(&fv, &marked, m, &tree), 3);
        // headline only plus a short tick: no long vertical run -> 6
        let tick = BinaryImage::from_fn(10, 14, |x, y| {
            (2..=3).contains(&y) || (x == 9 && y == 4) || (x == 0 && y == 13)
        });
        let fv = extract_features(&tick, m, 13).unwrap();
        assert!(fv.f7a < 0.7);
        assert_eq!(tree_classify(&fv, &tick, m, &tree), 6);
        // narrow
        let narrow = BinaryImage::from_fn(4, 14, |_, y| y >= 2);
        let fv = extract_features(&narrow, m, 13).unwrap();
        assert_eq!(tree_classify(&fv, &narrow, m, &tree), 2);
    }

    #[test]
    fn left_slant_detects_falling_diagonal() {
        let diag = BinaryImage::from_fn(10, 10, |x, y| x == y);
        let fv = extract_features(&diag, Span::new(0, 0), 9).unwrap();
        let x = RouteInput { fv: &fv, ch: &diag, matra: Span::new(0, 0) };
        assert!(evaluate(TreeTest::LeftSlant, None, &x));
        let bar = BinaryImage::from_fn(10, 10, |x, _| x == 0);
        let fv = extract_features(&bar, Span::new(0, 0), 9).unwrap();
        let x = RouteInput { fv: &fv, ch: &bar, matra: Span::new(0, 0) };
        assert!(!evaluate(TreeTest::LeftSlant, None, &x));
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let shared = DecisionTree {
            root: 0,
            nodes: vec![
                TreeNode::Internal { id: 0, test: TreeTest::HeadLine, threshold: None, yes: 1, no: 1 },
                TreeNode::Leaf { id: 1, templates: vec![] },
            ],
        };
        assert!(shared.validate().is_err());
        let no_threshold = DecisionTree {
            root: 0,
            nodes: vec![
                TreeNode::Internal { id: 0, test: TreeTest::BboxWidth, threshold: None, yes: 1, no: 2 },
                TreeNode::Leaf { id: 1, templates: vec![] },
                TreeNode::Leaf { id: 2, templates: vec![] },
            ],
        };
        assert!(no_threshold.validate().is_err());
        let orphan = DecisionTree {
            root: 0,
            nodes: vec![
                TreeNode::Leaf { id: 0, templates: vec![] },
                TreeNode::Leaf { id: 1, templates: vec![] },
            ],
        };
        assert!(orphan.validate().is_err());
    }

    #[test]
    fn default_tree_threshold_and_pruning() {
        let mut tree = default_tree(&[4, 5, 6, 12, 13, 14]);
        tree.validate().unwrap();
        match &tree.nodes[0] {
            TreeNode::Internal { threshold, .. } => assert_eq!(*threshold, Some(9.0)),
            _ => panic!(),
        }
        tree.leaf_templates_mut(2).unwrap().push(template("w", 12));
        tree.leaf_templates_mut(5).unwrap().push(template("n", 4));
        let pruned = tree.prune_empty_leaves();
        pruned.validate().unwrap();
        assert_eq!(pruned.nodes.len(), 3);
        assert_eq!(pruned.templates().count(), 2);
        // routing is preserved for the surviving leaves
        let g = glyph(12);
        let fv = extract_features(&g, M, 11).unwrap();
        let leaf = tree_classify(&fv, &g, M, &pruned);
        assert_eq!(pruned.leaf_templates(leaf)[0].label, "w");
        let g = glyph(4);
        let fv = extract_features(&g, M, 11).unwrap();
        let leaf = tree_classify(&fv, &g, M, &pruned);
        assert_eq!(pruned.leaf_templates(leaf)[0].label, "n");
    }

    #[test]
    fn json_shape() {
        let tree = default_tree(&[3, 9]);
        let v = serde_json::to_value(&tree).unwrap();
        assert_eq!(v["nodes"][0]["kind"], "internal");
        assert_eq!(v["nodes"][0]["test"], "bbox_width");
        assert_eq!(v["nodes"][2]["kind"], "leaf");
        let back: DecisionTree = serde_json::from_value(v).unwrap();
        assert_eq!(back, tree);
    }
}
