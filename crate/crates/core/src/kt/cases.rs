use serde::{Deserialize, Serialize};

/// Situation of one online step, judged against the hidden ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepCase {
    /// Student right, pseudo-label wrong.
    StudentOnly = 1,
    /// Both right.
    Both = 2,
    /// Student wrong, pseudo-label right.
    PseudoOnly = 3,
    /// Both wrong.
    Neither = 4,
}

impl StepCase {
    pub fn number(self) -> u8 {
        self as u8
    }

    /// Whether the update pushes the student toward the right answer.
    pub fn is_fine(self) -> bool {
        matches!(self, StepCase::Both | StepCase::PseudoOnly)
    }
}

pub fn step_case(student_correct: bool, pseudo_label_correct: bool) -> StepCase {
    match (student_correct, pseudo_label_correct) {
        (true, false) => StepCase::StudentOnly,
        (true, true) => StepCase::Both,
        (false, true) => StepCase::PseudoOnly,
        (false, false) => StepCase::Neither,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub case1: u64,
    pub case2: u64,
    pub case3: u64,
    pub case4: u64,
}

impl CaseCounts {
    pub fn add(&mut self, case: StepCase) {
        match case {
            StepCase::StudentOnly => self.case1 += 1,
            StepCase::Both => self.case2 += 1,
            StepCase::PseudoOnly => self.case3 += 1,
            StepCase::Neither => self.case4 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.case1 + self.case2 + self.case3 + self.case4
    }

    /// Share of steps whose pseudo-label was right.
    pub fn teacher_correctness(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.case2 + self.case3) as f64 / n as f64,
        }
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.case1, self.case2, self.case3, self.case4]
    }
}
