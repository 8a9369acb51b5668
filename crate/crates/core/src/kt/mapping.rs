use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kt::KtError;

/// Serialized form of a mapping: both class lists plus teacher-to-student name pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingSpec {
    pub teacher_classes: Vec<String>,
    pub student_classes: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

/// Validated bijection between teacher and student classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MappingSpec", into = "MappingSpec")]
pub struct ClassMapping {
    teacher_classes: Vec<String>,
    student_classes: Vec<String>,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

fn index_of(names: &[String], side: &str) -> Result<HashMap<String, usize>, KtError> {
    let mut map = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i).is_some() {
            return Err(KtError::InvalidArgument(format!("{side} class {n:?} listed twice")));
        }
    }
    Ok(map)
}

pub fn build_class_mapping(
    teacher_classes: &[String],
    student_classes: &[String],
    pairs: &[(String, String)],
) -> Result<ClassMapping, KtError> {
    let k = teacher_classes.len();
    if k != student_classes.len() {
        return Err(KtError::ClassCountMismatch { teacher: k, student: student_classes.len() });
    }
    if k == 0 {
        return Err(KtError::InvalidArgument("mapping needs at least one class".into()));
    }
    let t_index = index_of(teacher_classes, "teacher")?;
    let s_index = index_of(student_classes, "student")?;
    let mut forward = vec![usize::MAX; k];
    let mut inverse = vec![usize::MAX; k];
    for (t, s) in pairs {
        let ti = *t_index
            .get(t)
            .ok_or_else(|| KtError::NonBijective(format!("unknown teacher class {t:?}")))?;
        let si = *s_index
            .get(s)
            .ok_or_else(|| KtError::NonBijective(format!("unknown student class {s:?}")))?;
        if forward[ti] != usize::MAX {
            return Err(KtError::NonBijective(format!("teacher class {t:?} mapped twice")));
        }
        if inverse[si] != usize::MAX {
            return Err(KtError::NonBijective(format!(
                "student class {s:?} is the target of both {:?} and {t:?}",
                teacher_classes[inverse[si]]
            )));
        }
        forward[ti] = si;
        inverse[si] = ti;
    }
    if let Some(ti) = forward.iter().position(|&s| s == usize::MAX) {
        return Err(KtError::NonBijective(format!("teacher class {:?} has no target", teacher_classes[ti])));
    }
    Ok(ClassMapping {
        teacher_classes: teacher_classes.to_vec(),
        student_classes: student_classes.to_vec(),
        forward,
        inverse,
    })
}

impl ClassMapping {
    /// Teacher class `i` maps to student class `i`.
    pub fn index_order(teacher_classes: &[String], student_classes: &[String]) -> Result<Self, KtError> {
        let pairs: Vec<(String, String)> = teacher_classes
            .iter()
            .cloned()
            .zip(student_classes.iter().cloned())
            .collect();
        build_class_mapping(teacher_classes, student_classes, &pairs)
    }

    /// Index-order mapping over `k` classes named by index on both sides.
    pub fn identity(k: usize) -> Self {
        let names: Vec<String> = (0..k).map(|i| i.to_string()).collect();
        Self::index_order(&names, &names).expect("identity is a bijection")
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn teacher_classes(&self) -> &[String] {
        &self.teacher_classes
    }

    pub fn student_classes(&self) -> &[String] {
        &self.student_classes
    }

    /// Student class for a teacher class index.
    pub fn transform(&self, teacher_label: usize) -> Result<usize, KtError> {
        self.forward.get(teacher_label).copied().ok_or(KtError::UnmappedLabel(teacher_label))
    }

    pub fn inverse(&self, student_label: usize) -> Result<usize, KtError> {
        self.inverse
            .get(student_label)
            .copied()
            .ok_or_else(|| KtError::InvalidArgument(format!("student label {student_label} out of range")))
    }

    pub fn transform_name(&self, teacher_class: &str) -> Result<&str, KtError> {
        let t = self
            .teacher_classes
            .iter()
            .position(|c| c == teacher_class)
            .ok_or_else(|| KtError::InvalidArgument(format!("unknown teacher class {teacher_class:?}")))?;
        Ok(&self.student_classes[self.forward[t]])
    }

    /// Length-prefixed byte form hashed by [`ClassMapping::digest`].
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = b"KTMAP1".to_vec();
        out.extend_from_slice(&(self.len() as u32).to_be_bytes());
        for name in self.teacher_classes.iter().chain(&self.student_classes) {
            out.extend_from_slice(&(name.len() as u32).to_be_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        for &s in &self.forward {
            out.extend_from_slice(&(s as u32).to_be_bytes());
        }
        out
    }

    /// First 8 bytes of SHA-256 over the canonical form, big-endian.
    pub fn digest(&self) -> u64 {
        let hash = Sha256::digest(self.canonical_bytes());
        u64::from_be_bytes(hash[..8].try_into().unwrap())
    }

    pub fn to_spec(&self) -> MappingSpec {
        MappingSpec {
            teacher_classes: self.teacher_classes.clone(),
            student_classes: self.student_classes.clone(),
            pairs: self
                .forward
                .iter()
                .enumerate()
                .map(|(t, &s)| (self.teacher_classes[t].clone(), self.student_classes[s].clone()))
                .collect(),
        }
    }
}

impl TryFrom<MappingSpec> for ClassMapping {
    type Error = KtError;

    fn try_from(spec: MappingSpec) -> Result<Self, KtError> {
        build_class_mapping(&spec.teacher_classes, &spec.student_classes, &spec.pairs)
    }
}

impl From<ClassMapping> for MappingSpec {
    fn from(m: ClassMapping) -> Self {
        m.to_spec()
    }
}
