use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::euler::RotationOrder;
use super::math::Vec3;
use super::AnimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    /// `None` only for the root, which is always index 0.
    pub parent: Option<usize>,
    /// Offset from the parent joint in the parent's frame, meters.
    pub rest_offset: Vec3,
    pub rotation_order: RotationOrder,
    /// BVH `End Site`: a channel-less leaf whose rotation stays identity.
    #[serde(default)]
    pub end_site: bool,
}

impl Joint {
    pub fn new(name: impl Into<String>, parent: Option<usize>, rest_offset: Vec3) -> Self {
        Joint {
            name: name.into(),
            parent,
            rest_offset,
            rotation_order: RotationOrder::default(),
            end_site: false,
        }
    }

    pub fn with_order(mut self, order: RotationOrder) -> Self {
        self.rotation_order = order;
        self
    }

    pub fn end_site(mut self) -> Self {
        self.end_site = true;
        self
    }
}

/// A topologically sorted joint hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    name: String,
    joints: Vec<Joint>,
}

impl Skeleton {
    pub fn new(name: impl Into<String>, joints: Vec<Joint>) -> Result<Self, AnimError> {
        let name = name.into();
        let bad = |msg: String| AnimError::InvalidSkeleton { skeleton: name.clone(), message: msg };
        if joints.is_empty() {
            return Err(bad("no joints".into()));
        }
        let mut seen = HashSet::new();
        for (i, j) in joints.iter().enumerate() {
            match (i, j.parent) {
                (0, None) => {}
                (0, Some(_)) => return Err(bad(format!("root `{}` has a parent", j.name))),
                (_, None) => return Err(bad(format!("joint `{}` is a second root", j.name))),
                (_, Some(p)) if p >= i => {
                    return Err(bad(format!("joint `{}` appears before its parent", j.name)))
                }
                _ => {}
            }
            if !seen.insert(j.name.as_str()) {
                return Err(bad(format!("duplicate joint name `{}`", j.name)));
            }
            if !j.rest_offset.is_finite() {
                return Err(bad(format!("joint `{}` has a non-finite offset", j.name)));
            }
        }
        Ok(Skeleton { name, joints })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn root(&self) -> &Joint {
        &self.joints[0]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        self.joints.iter().map(|j| j.parent).collect()
    }

    /// Same joint names, parents and orders; offsets may differ.
    pub fn same_topology(&self, other: &Skeleton) -> bool {
        self.joints.len() == other.joints.len()
            && self
                .joints
                .iter()
                .zip(&other.joints)
                .all(|(a, b)| a.name == b.name && a.parent == b.parent)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}
