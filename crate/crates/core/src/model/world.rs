use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::action::{AccessRequest, ActionKind, Timestamp};
use super::effect::Effect;
use super::ids::{split_append_target, GradeId, ResourceId, ReviewId, UserId, VersionId};
use super::ModelError;
use crate::oracle::{self, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Version {
    pub id: VersionId,
    pub uploader: UserId,
    pub at: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Homework {
    pub id: ResourceId,
    pub author: UserId,
    /// Upload history, oldest first. Never empty.
    pub versions: Vec<Version>,
    pub submitted: bool,
    pub submitted_at: Option<Timestamp>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: ReviewId,
    pub homework: ResourceId,
    pub creator: UserId,
    pub created_at: Timestamp,
    pub revision_count: u32,
    pub appended_to: Option<GradeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grade {
    pub id: GradeId,
    pub homework: ResourceId,
    pub creator: UserId,
    pub created_at: Timestamp,
    pub appended_reviews: BTreeSet<ReviewId>,
}

/// The full provenance state of the classroom: who wrote, submitted,
/// reviewed and graded what.
///
/// Mutation goes through [`WorldState::apply_in_place`] (policy-checked) or
/// the raw `insert_*` constructors (integrity-checked only). Both keep the
/// `reviews_by_homework` / `grade_by_homework` indexes in step with the
/// primary maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorldState {
    users: BTreeSet<UserId>,
    homeworks: BTreeMap<ResourceId, Homework>,
    reviews: BTreeMap<ReviewId, Review>,
    grades: BTreeMap<GradeId, Grade>,
    reviews_by_homework: BTreeMap<ResourceId, Vec<ReviewId>>,
    grade_by_homework: BTreeMap<ResourceId, GradeId>,
    id_base: u64,
    next_version: u64,
    next_review: u64,
    next_grade: u64,
}

impl WorldState {
    /// Creates a world with users `u1..=u<user_count>` and no resources.
    /// Generated version/review/grade ids count up from `id_seed + 1`.
    pub fn new(user_count: usize, id_seed: u64) -> Result<Self, ModelError> {
        if user_count == 0 {
            return Err(ModelError::InvalidArgument(
                "user_count must be at least 1".into(),
            ));
        }
        Ok(WorldState {
            users: (1..=user_count).map(|i| UserId::new(format!("u{i}"))).collect(),
            homeworks: BTreeMap::new(),
            reviews: BTreeMap::new(),
            grades: BTreeMap::new(),
            reviews_by_homework: BTreeMap::new(),
            grade_by_homework: BTreeMap::new(),
            id_base: id_seed,
            next_version: 1,
            next_review: 1,
            next_grade: 1,
        })
    }

    pub fn users(&self) -> &BTreeSet<UserId> {
        &self.users
    }

    pub fn has_user(&self, user: &str) -> bool {
        self.users.contains(user)
    }

    pub fn add_user(&mut self, user: UserId) -> Result<(), ModelError> {
        if user.as_str().is_empty() {
            return Err(ModelError::InvalidArgument("empty user id".into()));
        }
        if !self.users.insert(user.clone()) {
            return Err(ModelError::Conflict(format!("user {user} already exists")));
        }
        Ok(())
    }

    pub fn homeworks(&self) -> &BTreeMap<ResourceId, Homework> {
        &self.homeworks
    }

    pub fn reviews(&self) -> &BTreeMap<ReviewId, Review> {
        &self.reviews
    }

    pub fn grades(&self) -> &BTreeMap<GradeId, Grade> {
        &self.grades
    }

    pub fn homework(&self, id: &str) -> Option<&Homework> {
        self.homeworks.get(id)
    }

    pub fn review(&self, id: &str) -> Option<&Review> {
        self.reviews.get(id)
    }

    pub fn grade(&self, id: &str) -> Option<&Grade> {
        self.grades.get(id)
    }

    /// Reviews of `homework` in creation order.
    pub fn reviews_of(&self, homework: &str) -> &[ReviewId] {
        self.reviews_by_homework
            .get(homework)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn review_count(&self, homework: &str) -> usize {
        self.reviews_of(homework).len()
    }

    pub fn grade_of(&self, homework: &str) -> Option<&Grade> {
        self.grade_by_homework
            .get(homework)
            .and_then(|g| self.grades.get(g))
    }

    pub fn is_graded(&self, homework: &str) -> bool {
        self.grade_by_homework.contains_key(homework)
    }

    /// Whether `id` names any entity (homework, review or grade).
    pub fn contains_id(&self, id: &str) -> bool {
        self.homeworks.contains_key(id) || self.reviews.contains_key(id) || self.grades.contains_key(id)
    }

    fn require_user(&self, user: &UserId) -> Result<(), ModelError> {
        if self.users.contains(user) {
            Ok(())
        } else {
            Err(ModelError::not_found("user", user.as_str()))
        }
    }

    fn require_fresh(&self, id: &str) -> Result<(), ModelError> {
        if id.is_empty() {
            return Err(ModelError::InvalidArgument("empty resource id".into()));
        }
        if split_append_target(id).is_some() || id.contains(super::ids::APPEND_SEPARATOR) {
            return Err(ModelError::InvalidArgument(format!(
                "resource id '{id}' may not contain '{}'",
                super::ids::APPEND_SEPARATOR
            )));
        }
        if self.contains_id(id) {
            return Err(ModelError::Conflict(format!("id {id} already exists")));
        }
        Ok(())
    }

    /// Inserts a homework as-is. Checks referential integrity and id
    /// freshness, not policy.
    pub fn insert_homework(&mut self, hw: Homework) -> Result<(), ModelError> {
        self.require_fresh(hw.id.as_str())?;
        self.require_user(&hw.author)?;
        if hw.versions.is_empty() {
            return Err(ModelError::InvalidArgument(format!(
                "homework {} has no versions",
                hw.id
            )));
        }
        for v in &hw.versions {
            self.require_user(&v.uploader)?;
        }
        if hw.submitted != hw.submitted_at.is_some() {
            return Err(ModelError::InvalidArgument(format!(
                "homework {}: submitted_at must be present iff submitted",
                hw.id
            )));
        }
        self.reviews_by_homework.insert(hw.id.clone(), Vec::new());
        self.homeworks.insert(hw.id.clone(), hw);
        Ok(())
    }

    /// Inserts a review as-is (it must not already be appended anywhere).
    pub fn insert_review(&mut self, review: Review) -> Result<(), ModelError> {
        self.require_fresh(review.id.as_str())?;
        self.require_user(&review.creator)?;
        if !self.homeworks.contains_key(&review.homework) {
            return Err(ModelError::not_found("homework", review.homework.as_str()));
        }
        if review.appended_to.is_some() {
            return Err(ModelError::InvalidArgument(format!(
                "review {} must be inserted unappended; insert the grade with appended_reviews instead",
                review.id
            )));
        }
        self.reviews_by_homework
            .entry(review.homework.clone())
            .or_default()
            .push(review.id.clone());
        self.reviews.insert(review.id.clone(), review);
        Ok(())
    }

    /// Inserts a grade and marks each of its `appended_reviews` as appended.
    pub fn insert_grade(&mut self, grade: Grade) -> Result<(), ModelError> {
        self.require_fresh(grade.id.as_str())?;
        self.require_user(&grade.creator)?;
        if !self.homeworks.contains_key(&grade.homework) {
            return Err(ModelError::not_found("homework", grade.homework.as_str()));
        }
        if self.grade_by_homework.contains_key(&grade.homework) {
            return Err(ModelError::Conflict(format!(
                "homework {} is already graded",
                grade.homework
            )));
        }
        for rid in &grade.appended_reviews {
            let review = self
                .reviews
                .get(rid)
                .ok_or_else(|| ModelError::not_found("review", rid.as_str()))?;
            if review.homework != grade.homework {
                return Err(ModelError::InvalidArgument(format!(
                    "review {rid} belongs to {}, not {}",
                    review.homework, grade.homework
                )));
            }
            if review.appended_to.is_some() {
                return Err(ModelError::Conflict(format!("review {rid} is already appended")));
            }
        }
        for rid in &grade.appended_reviews {
            if let Some(r) = self.reviews.get_mut(rid) {
                r.appended_to = Some(grade.id.clone());
            }
        }
        self.grade_by_homework
            .insert(grade.homework.clone(), grade.id.clone());
        self.grades.insert(grade.id.clone(), grade);
        Ok(())
    }

    fn fresh_id(&mut self, prefix: &str, which: fn(&mut Self) -> &mut u64) -> String {
        loop {
            let n = {
                let counter = which(self);
                let n = *counter;
                *counter += 1;
                n
            };
            let id = format!("{prefix}{}", self.id_base + n);
            if !self.contains_id(&id) {
                return id;
            }
        }
    }

    fn fresh_version_id(&mut self) -> VersionId {
        let n = self.next_version;
        self.next_version += 1;
        VersionId::new(format!("v{}", self.id_base + n))
    }

    /// Applies an allowed request, returning the successor state and the
    /// effect. `self` is left untouched.
    pub fn apply_effect(&self, request: &AccessRequest) -> Result<(WorldState, Effect), ModelError> {
        let mut next = self.clone();
        let effect = next.apply_in_place(request)?;
        Ok((next, effect))
    }

    /// Applies an allowed request to this state. On any error the state is
    /// unchanged.
    pub fn apply_in_place(&mut self, request: &AccessRequest) -> Result<Effect, ModelError> {
        let decision = oracle::decide(self, request)?;
        if decision.verdict != Verdict::Allow {
            return Err(ModelError::PolicyViolation(Box::new(decision)));
        }
        let user = request.user.clone();
        let at = request.timestamp;
        let target = request.resource.as_str();
        let effect = match request.action {
            ActionKind::UploadHomework => {
                self.require_fresh(target)?;
                let version = self.fresh_version_id();
                let hw = Homework {
                    id: request.resource.clone(),
                    author: user.clone(),
                    versions: vec![Version {
                        id: version.clone(),
                        uploader: user.clone(),
                        at,
                    }],
                    submitted: false,
                    submitted_at: None,
                };
                self.reviews_by_homework.insert(hw.id.clone(), Vec::new());
                self.homeworks.insert(hw.id.clone(), hw);
                Effect::HomeworkUploaded {
                    homework: request.resource.clone(),
                    author: user,
                    version,
                }
            }
            ActionKind::ReplaceHomework => {
                let version = self.fresh_version_id();
                let hw = self.homework_mut(target)?;
                hw.versions.push(Version {
                    id: version.clone(),
                    uploader: user,
                    at,
                });
                Effect::HomeworkReplaced {
                    homework: request.resource.clone(),
                    version,
                }
            }
            ActionKind::SubmitHomework => {
                let hw = self.homework_mut(target)?;
                hw.submitted = true;
                hw.submitted_at = Some(at);
                Effect::HomeworkSubmitted {
                    homework: request.resource.clone(),
                    at,
                }
            }
            ActionKind::ReviewHomework => {
                let review_id = ReviewId::new(self.fresh_id("rv", |s| &mut s.next_review));
                let review = Review {
                    id: review_id.clone(),
                    homework: request.resource.clone(),
                    creator: user.clone(),
                    created_at: at,
                    revision_count: 0,
                    appended_to: None,
                };
                self.reviews_by_homework
                    .entry(review.homework.clone())
                    .or_default()
                    .push(review_id.clone());
                self.reviews.insert(review_id.clone(), review);
                Effect::ReviewCreated {
                    review_id,
                    homework: request.resource.clone(),
                    creator: user,
                }
            }
            ActionKind::ReviseReview => {
                let review = self
                    .reviews
                    .get_mut(target)
                    .ok_or_else(|| ModelError::not_found("review", target))?;
                review.revision_count += 1;
                Effect::ReviewRevised {
                    review: review.id.clone(),
                    revision_count: review.revision_count,
                }
            }
            ActionKind::GradeHomework => {
                let grade_id = GradeId::new(self.fresh_id("gr", |s| &mut s.next_grade));
                let grade = Grade {
                    id: grade_id.clone(),
                    homework: request.resource.clone(),
                    creator: user.clone(),
                    created_at: at,
                    appended_reviews: BTreeSet::new(),
                };
                self.grade_by_homework
                    .insert(grade.homework.clone(), grade_id.clone());
                self.grades.insert(grade_id.clone(), grade);
                Effect::GradeCreated {
                    grade_id,
                    homework: request.resource.clone(),
                    creator: user,
                }
            }
            ActionKind::AppendReviewToGrade => {
                let (rid, gid) = split_append_target(target)
                    .ok_or_else(|| ModelError::InvalidArgument(format!("bad append target {target}")))?;
                let grade_id = GradeId::from(gid);
                let review_id = ReviewId::from(rid);
                let grade = self
                    .grades
                    .get_mut(gid)
                    .ok_or_else(|| ModelError::not_found("grade", gid))?;
                grade.appended_reviews.insert(review_id.clone());
                let review = self
                    .reviews
                    .get_mut(rid)
                    .ok_or_else(|| ModelError::not_found("review", rid))?;
                review.appended_to = Some(grade_id.clone());
                Effect::ReviewAppended {
                    grade: grade_id,
                    review: review_id,
                }
            }
        };
        Ok(effect)
    }

    fn homework_mut(&mut self, id: &str) -> Result<&mut Homework, ModelError> {
        self.homeworks
            .get_mut(id)
            .ok_or_else(|| ModelError::not_found("homework", id))
    }

    /// Recomputes the derived indexes from the primary maps and checks
    /// every structural invariant. The workflow invariants that only hold
    /// for policy-built states (uploader = author, reviewer ≠ author) are
    /// checked separately by [`WorldState::check_workflow_invariants`].
    pub fn check_integrity(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Integrity(msg));
        let mut by_hw: BTreeMap<ResourceId, Vec<(Timestamp, &ReviewId)>> = self
            .homeworks
            .keys()
            .map(|h| (h.clone(), Vec::new()))
            .collect();
        for (id, r) in &self.reviews {
            if id != &r.id {
                return fail(format!("review key {id} != id {}", r.id));
            }
            if !self.users.contains(&r.creator) {
                return fail(format!("review {id} has unknown creator {}", r.creator));
            }
            match by_hw.get_mut(&r.homework) {
                Some(v) => v.push((r.created_at, id)),
                None => return fail(format!("review {id} references unknown homework {}", r.homework)),
            }
            if let Some(g) = &r.appended_to {
                match self.grades.get(g) {
                    Some(grade) if grade.appended_reviews.contains(id) => {}
                    _ => return fail(format!("review {id} appended_to {g} is not mirrored")),
                }
            }
        }
        for (hw, listed) in &self.reviews_by_homework {
            let expected = by_hw
                .get(hw)
                .ok_or_else(|| ModelError::Integrity(format!("index lists unknown homework {hw}")))?;
            let mut want: Vec<&ReviewId> = expected.iter().map(|(_, id)| *id).collect();
            let mut have: Vec<&ReviewId> = listed.iter().collect();
            want.sort();
            have.sort();
            if want != have {
                return fail(format!("reviews_by_homework[{hw}] out of sync"));
            }
        }
        if self.reviews_by_homework.len() != self.homeworks.len() {
            return fail("reviews_by_homework does not cover every homework".into());
        }
        let mut graded = BTreeMap::new();
        for (id, g) in &self.grades {
            if id != &g.id {
                return fail(format!("grade key {id} != id {}", g.id));
            }
            if !self.users.contains(&g.creator) {
                return fail(format!("grade {id} has unknown creator {}", g.creator));
            }
            if !self.homeworks.contains_key(&g.homework) {
                return fail(format!("grade {id} references unknown homework {}", g.homework));
            }
            if graded.insert(g.homework.clone(), id.clone()).is_some() {
                return fail(format!("homework {} has more than one grade", g.homework));
            }
            for rid in &g.appended_reviews {
                match self.reviews.get(rid) {
                    Some(r) if r.homework == g.homework && r.appended_to.as_ref() == Some(id) => {}
                    _ => return fail(format!("grade {id} appended review {rid} is inconsistent")),
                }
            }
        }
        if graded != self.grade_by_homework {
            return fail("grade_by_homework out of sync".into());
        }
        for (id, hw) in &self.homeworks {
            if id != &hw.id {
                return fail(format!("homework key {id} != id {}", hw.id));
            }
            if hw.versions.is_empty() {
                return fail(format!("homework {id} has no versions"));
            }
            if hw.submitted != hw.submitted_at.is_some() {
                return fail(format!("homework {id} submitted flag disagrees with submitted_at"));
            }
            if !self.users.contains(&hw.author) {
                return fail(format!("homework {id} has unknown author {}", hw.author));
            }
        }
        Ok(())
    }

    /// Invariants that hold for every state reached through
    /// [`WorldState::apply_in_place`] from an empty world.
    pub fn check_workflow_invariants(&self) -> Result<(), ModelError> {
        self.check_integrity()?;
        for hw in self.homeworks.values() {
            if let Some(v) = hw.versions.iter().find(|v| v.uploader != hw.author) {
                return Err(ModelError::Integrity(format!(
                    "homework {} version {} uploaded by non-author {}",
                    hw.id, v.id, v.uploader
                )));
            }
            let n = self.review_count(hw.id.as_str());
            if n > 3 {
                return Err(ModelError::Integrity(format!("homework {} has {n} reviews", hw.id)));
            }
            if n > 0 && !hw.submitted {
                return Err(ModelError::Integrity(format!(
                    "homework {} reviewed before submission",
                    hw.id
                )));
            }
        }
        for r in self.reviews.values() {
            if let Some(hw) = self.homeworks.get(&r.homework) {
                if hw.author == r.creator {
                    return Err(ModelError::Integrity(format!(
                        "review {} created by the homework author",
                        r.id
                    )));
                }
            }
        }
        for g in self.grades.values() {
            if self.review_count(g.homework.as_str()) < 2 {
                return Err(ModelError::Integrity(format!(
                    "grade {} on homework with fewer than 2 reviews",
                    g.id
                )));
            }
        }
        Ok(())
    }
}

impl Effect {
    pub fn action(&self) -> ActionKind {
        match self {
            Effect::HomeworkUploaded { .. } => ActionKind::UploadHomework,
            Effect::HomeworkReplaced { .. } => ActionKind::ReplaceHomework,
            Effect::HomeworkSubmitted { .. } => ActionKind::SubmitHomework,
            Effect::ReviewCreated { .. } => ActionKind::ReviewHomework,
            Effect::ReviewRevised { .. } => ActionKind::ReviseReview,
            Effect::GradeCreated { .. } => ActionKind::GradeHomework,
            Effect::ReviewAppended { .. } => ActionKind::AppendReviewToGrade,
        }
    }
}
