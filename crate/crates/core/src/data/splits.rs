use serde::{Deserialize, Serialize};

use crate::data::{DataError, Dataset, LabeledExample, Sample};
use crate::kt::ClassMapping;
use crate::rng::RngState;

/// Online-learning sample counts, indexed by teacher class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OlCounts {
    PerClass(usize),
    Explicit(Vec<usize>),
    /// Whatever the teacher dataset has left after pretraining.
    TeacherRemainder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PretrainCounts {
    /// Everything not used for online learning.
    Remainder,
    PerClass(usize),
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub ol: OlCounts,
    pub teacher_pretrain: PretrainCounts,
    #[serde(default = "one")]
    pub semi_train_per_class: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl SplitPlan {
    pub fn balanced(ol_per_class: usize, seed: u64) -> Self {
        Self {
            ol: OlCounts::PerClass(ol_per_class),
            teacher_pretrain: PretrainCounts::Remainder,
            semi_train_per_class: 1,
            seed,
        }
    }

    pub fn imbalanced(pretrain: Vec<usize>, seed: u64) -> Self {
        Self {
            ol: OlCounts::TeacherRemainder,
            teacher_pretrain: PretrainCounts::Explicit(pretrain),
            semi_train_per_class: 1,
            seed,
        }
    }

    /// Per-class (OL, pretrain) counts for a teacher dataset with `available` examples per class.
    pub fn resolve(&self, available: &[usize]) -> Result<(Vec<usize>, Vec<usize>), DataError> {
        let k = available.len();
        let check_len = |v: &Vec<usize>, what: &str| {
            if v.len() == k {
                Ok(())
            } else {
                Err(DataError::InvalidArgument(format!("{what} has {} entries for {k} classes", v.len())))
            }
        };
        if self.semi_train_per_class == 0 {
            return Err(DataError::InvalidArgument("semi-train count must be at least 1 per class".into()));
        }
        let pretrain_fixed: Option<Vec<usize>> = match &self.teacher_pretrain {
            PretrainCounts::Remainder => None,
            PretrainCounts::PerClass(n) => Some(vec![*n; k]),
            PretrainCounts::Explicit(v) => {
                check_len(v, "pretrain counts")?;
                Some(v.clone())
            }
        };
        let ol: Vec<usize> = match (&self.ol, &pretrain_fixed) {
            (OlCounts::PerClass(n), _) => vec![*n; k],
            (OlCounts::Explicit(v), _) => {
                check_len(v, "OL counts")?;
                v.clone()
            }
            (OlCounts::TeacherRemainder, Some(p)) => {
                available.iter().zip(p).map(|(&a, &p)| a.saturating_sub(p)).collect()
            }
            (OlCounts::TeacherRemainder, None) => {
                return Err(DataError::InvalidArgument(
                    "OL and pretrain counts cannot both be remainders".into(),
                ))
            }
        };
        let pretrain = pretrain_fixed
            .unwrap_or_else(|| available.iter().zip(&ol).map(|(&a, &o)| a.saturating_sub(o)).collect());
        Ok((ol, pretrain))
    }
}

/// Labels hidden from the models; used only for scoring in simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub teacher: Vec<usize>,
    pub student: Vec<usize>,
}

/// Two aligned sample sequences. Position `i` of the teacher sequence and
/// position `i` of the student sequence belong to mapped classes.
#[derive(Clone, Debug)]
pub struct PairedStream {
    teacher: Vec<Sample>,
    student: Vec<Sample>,
    truth: Option<GroundTruth>,
    mapping: ClassMapping,
}

impl PairedStream {
    pub fn new(
        teacher: Vec<Sample>,
        student: Vec<Sample>,
        truth: Option<GroundTruth>,
        mapping: ClassMapping,
    ) -> Result<Self, DataError> {
        if teacher.len() != student.len() {
            return Err(DataError::PairedStream(format!(
                "{} teacher samples but {} student samples",
                teacher.len(),
                student.len()
            )));
        }
        if let Some(t) = &truth {
            if t.teacher.len() != teacher.len() || t.student.len() != student.len() {
                return Err(DataError::PairedStream("ground truth length differs from the stream".into()));
            }
            for (i, (&a, &b)) in t.teacher.iter().zip(&t.student).enumerate() {
                if mapping.transform(a).ok() != Some(b) {
                    return Err(DataError::PairedStream(format!(
                        "position {i}: teacher class {a} does not map to student class {b}"
                    )));
                }
            }
        }
        Ok(Self { teacher, student, truth, mapping })
    }

    /// Replaces the hidden labels without the ordering check. Used to show
    /// that deployment-mode results never read them.
    pub fn with_ground_truth_unchecked(mut self, truth: GroundTruth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn len(&self) -> usize {
        self.teacher.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teacher.is_empty()
    }

    pub fn teacher_view(&self) -> &[Sample] {
        &self.teacher
    }

    pub fn student_view(&self) -> &[Sample] {
        &self.student
    }

    pub fn ground_truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    pub fn mapping(&self) -> &ClassMapping {
        &self.mapping
    }

    /// First `n` positions.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            teacher: self.teacher[..n].to_vec(),
            student: self.student[..n].to_vec(),
            truth: self.truth.as_ref().map(|t| GroundTruth {
                teacher: t.teacher[..n].to_vec(),
                student: t.student[..n].to_vec(),
            }),
            mapping: self.mapping.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Splits {
    pub teacher_pretrain: Vec<LabeledExample>,
    pub student_semitrain: Vec<LabeledExample>,
    pub stream: PairedStream,
    /// Per teacher class.
    pub ol_counts: Vec<usize>,
    /// Per teacher class.
    pub pretrain_counts: Vec<usize>,
}

fn class_pools(ds: &Dataset) -> Vec<Vec<usize>> {
    let mut pools = vec![Vec::new(); ds.num_classes()];
    for (i, e) in ds.examples.iter().enumerate() {
        pools[e.label].push(i);
    }
    pools
}

/// Samples the teacher pretrain set, the student semi-train set and the
/// paired online-learning stream. Subsets are disjoint within each dataset.
pub fn build_splits(
    teacher_ds: &Dataset,
    student_ds: &Dataset,
    mapping: &ClassMapping,
    plan: &SplitPlan,
) -> Result<Splits, DataError> {
    let k = mapping.len();
    if teacher_ds.num_classes() != k || student_ds.num_classes() != k {
        return Err(DataError::InvalidArgument(format!(
            "mapping has {k} classes, teacher dataset {}, student dataset {}",
            teacher_ds.num_classes(),
            student_ds.num_classes()
        )));
    }
    let to_student: Vec<usize> = (0..k)
        .map(|t| mapping.transform(t))
        .collect::<Result<_, _>>()
        .map_err(|e| DataError::InvalidArgument(e.to_string()))?;

    let rng = RngState::new(plan.seed);
    let mut t_pools = class_pools(teacher_ds);
    let mut s_pools = class_pools(student_ds);
    let available: Vec<usize> = t_pools.iter().map(Vec::len).collect();
    let (ol, pretrain) = plan.resolve(&available)?;
    let semi = plan.semi_train_per_class;

    for t in 0..k {
        let need = ol[t] + pretrain[t];
        if need > available[t] {
            return Err(DataError::InsufficientExamples {
                dataset: "teacher",
                class: teacher_ds.class_names[t].clone(),
                needed: need,
                available: available[t],
            });
        }
        let s = to_student[t];
        let need = ol[t] + semi;
        if need > s_pools[s].len() {
            return Err(DataError::InsufficientExamples {
                dataset: "student",
                class: student_ds.class_names[s].clone(),
                needed: need,
                available: s_pools[s].len(),
            });
        }
    }

    for (t, pool) in t_pools.iter_mut().enumerate() {
        rng.derive(&format!("teacher/{t}")).shuffle(pool);
    }
    for (s, pool) in s_pools.iter_mut().enumerate() {
        rng.derive(&format!("student/{s}")).shuffle(pool);
    }

    // Teacher pools: [OL | pretrain | unused]; student pools: [semi-train | OL | unused].
    let mut teacher_pretrain = Vec::new();
    let mut student_semitrain = Vec::new();
    for t in 0..k {
        let s = to_student[t];
        for &i in &t_pools[t][ol[t]..ol[t] + pretrain[t]] {
            teacher_pretrain.push(teacher_ds.examples[i].clone());
        }
        for &i in &s_pools[s][..semi] {
            student_semitrain.push(student_ds.examples[i].clone());
        }
    }

    let mut order: Vec<usize> = (0..k).flat_map(|t| std::iter::repeat(t).take(ol[t])).collect();
    rng.derive("order").shuffle(&mut order);

    let mut next = vec![0usize; k];
    let mut teacher = Vec::with_capacity(order.len());
    let mut student = Vec::with_capacity(order.len());
    let mut truth = GroundTruth { teacher: Vec::with_capacity(order.len()), student: Vec::with_capacity(order.len()) };
    for &t in &order {
        let s = to_student[t];
        let ti = t_pools[t][next[t]];
        let si = s_pools[s][semi + next[t]];
        next[t] += 1;
        teacher.push(Sample { id: ti, image: teacher_ds.examples[ti].image.clone() });
        student.push(Sample { id: si, image: student_ds.examples[si].image.clone() });
        truth.teacher.push(t);
        truth.student.push(s);
    }
    let stream = PairedStream::new(teacher, student, Some(truth), mapping.clone())?;
    Ok(Splits { teacher_pretrain, student_semitrain, stream, ol_counts: ol, pretrain_counts: pretrain })
}
