use std::fmt;

use serde::{Deserialize, Serialize};

use super::action::{AccessRequest, ActionKind};
use super::ids::{split_append_target, APPEND_SEPARATOR, GradeId, ResourceId, ReviewId, UserId};
use super::world::{Grade, Review, WorldState};
use super::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Homework,
    Review,
    Grade,
    /// The target of an upload that does not exist yet.
    Unallocated,
}

impl ResourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceKind::Homework => "homework",
            ResourceKind::Review => "review",
            ResourceKind::Grade => "grade",
            ResourceKind::Unallocated => "unallocated",
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Flattened, self-contained view of the state relevant to one request.
///
/// Every field is always serialized (`null` when it does not apply to the
/// resource type), in declaration order. The homework-level fields
/// (`submitted` .. `version_count`) are populated for homework targets; the
/// review fields for review targets; the `grade_*` fields only for append
/// targets (`<review>@<grade>`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSnapshot {
    pub resource_type: ResourceKind,
    pub resource_id: ResourceId,
    pub requester: UserId,
    /// The homework the resource is (or belongs to).
    pub homework_id: Option<ResourceId>,
    /// Author of that homework.
    pub author: Option<UserId>,
    pub submitted: Option<bool>,
    pub graded: Option<bool>,
    pub review_count: Option<u32>,
    /// Reviewers in review-creation order.
    pub reviewers: Option<Vec<UserId>>,
    pub version_count: Option<u32>,
    pub requester_is_author: bool,
    pub requester_has_reviewed: bool,
    /// Creator of the review (review targets) or grade (grade targets).
    pub creator: Option<UserId>,
    pub homework_graded: Option<bool>,
    pub review_appended: Option<bool>,
    pub grade_id: Option<GradeId>,
    pub grade_creator: Option<UserId>,
    pub grade_homework_id: Option<ResourceId>,
    pub appended_review_ids: Option<Vec<ReviewId>>,
}

impl StateSnapshot {
    fn empty(kind: ResourceKind, resource: &str, requester: &UserId) -> Self {
        StateSnapshot {
            resource_type: kind,
            resource_id: ResourceId::from(resource),
            requester: requester.clone(),
            homework_id: None,
            author: None,
            submitted: None,
            graded: None,
            review_count: None,
            reviewers: None,
            version_count: None,
            requester_is_author: false,
            requester_has_reviewed: false,
            creator: None,
            homework_graded: None,
            review_appended: None,
            grade_id: None,
            grade_creator: None,
            grade_homework_id: None,
            appended_review_ids: None,
        }
    }

    /// Snapshot of a resource that does not exist yet (upload target).
    pub fn unallocated(resource: &str, requester: &UserId) -> Self {
        Self::empty(ResourceKind::Unallocated, resource, requester)
    }

    /// Whether the snapshot has the shape `action` operates on.
    pub fn fits_action(&self, action: ActionKind) -> bool {
        match action {
            ActionKind::UploadHomework => true,
            ActionKind::ReplaceHomework
            | ActionKind::SubmitHomework
            | ActionKind::ReviewHomework
            | ActionKind::GradeHomework => self.resource_type == ResourceKind::Homework,
            ActionKind::ReviseReview => {
                self.resource_type == ResourceKind::Review && self.grade_id.is_none()
            }
            ActionKind::AppendReviewToGrade => {
                self.resource_type == ResourceKind::Review && self.grade_id.is_some()
            }
        }
    }

    /// Checks that the derived fields agree with the raw ones. Snapshots
    /// built from a [`WorldState`] always pass; client-supplied ones may not.
    pub fn check_consistency(&self) -> Result<(), String> {
        let is_author = self.author.as_ref() == Some(&self.requester);
        if self.requester_is_author != is_author {
            return Err("requester_is_author disagrees with author/requester".into());
        }
        if let Some(reviewers) = &self.reviewers {
            if self.review_count != Some(reviewers.len() as u32) {
                return Err("review_count disagrees with reviewers".into());
            }
            if self.requester_has_reviewed != reviewers.contains(&self.requester) {
                return Err("requester_has_reviewed disagrees with reviewers".into());
            }
        } else if self.review_count.is_some() {
            return Err("review_count without reviewers".into());
        }
        match self.resource_type {
            ResourceKind::Homework => {
                if self.homework_id.as_ref() != Some(&self.resource_id) {
                    return Err("homework snapshot must have homework_id = resource_id".into());
                }
                if self.submitted.is_none() || self.graded.is_none() || self.reviewers.is_none() {
                    return Err("homework snapshot needs submitted, graded and reviewers".into());
                }
            }
            ResourceKind::Review => {
                if self.creator.is_none()
                    || self.homework_graded.is_none()
                    || self.review_appended.is_none()
                    || self.homework_id.is_none()
                {
                    return Err(
                        "review snapshot needs creator, homework_id, homework_graded and review_appended"
                            .into(),
                    );
                }
                if self.grade_id.is_some()
                    && (self.grade_creator.is_none() || self.grade_homework_id.is_none())
                {
                    return Err("append snapshot needs grade_creator and grade_homework_id".into());
                }
            }
            ResourceKind::Grade => {
                if self.creator.is_none() || self.homework_id.is_none() {
                    return Err("grade snapshot needs creator and homework_id".into());
                }
            }
            ResourceKind::Unallocated => {}
        }
        Ok(())
    }
}

enum Part<'a> {
    Homework(&'a super::world::Homework),
    Review(&'a Review),
    Grade(&'a Grade),
}

fn lookup<'a>(world: &'a WorldState, id: &str) -> Option<Part<'a>> {
    if let Some(h) = world.homework(id) {
        Some(Part::Homework(h))
    } else if let Some(r) = world.review(id) {
        Some(Part::Review(r))
    } else {
        world.grade(id).map(Part::Grade)
    }
}

fn fill_homework_relations(world: &WorldState, snap: &mut StateSnapshot, homework: &ResourceId) {
    if let Some(hw) = world.homework(homework.as_str()) {
        snap.homework_id = Some(hw.id.clone());
        snap.author = Some(hw.author.clone());
        snap.requester_is_author = hw.author == snap.requester;
        snap.requester_has_reviewed = world
            .reviews_of(hw.id.as_str())
            .iter()
            .filter_map(|r| world.review(r.as_str()))
            .any(|r| r.creator == snap.requester);
    }
}

fn part_snapshot(world: &WorldState, part: &Part<'_>, target: &str, requester: &UserId) -> StateSnapshot {
    match part {
        Part::Homework(hw) => {
            let mut snap = StateSnapshot::empty(ResourceKind::Homework, target, requester);
            fill_homework_relations(world, &mut snap, &hw.id);
            let reviewers: Vec<UserId> = world
                .reviews_of(hw.id.as_str())
                .iter()
                .filter_map(|r| world.review(r.as_str()))
                .map(|r| r.creator.clone())
                .collect();
            snap.submitted = Some(hw.submitted);
            snap.graded = Some(world.is_graded(hw.id.as_str()));
            snap.review_count = Some(reviewers.len() as u32);
            snap.reviewers = Some(reviewers);
            snap.version_count = Some(hw.versions.len() as u32);
            snap
        }
        Part::Review(r) => {
            let mut snap = StateSnapshot::empty(ResourceKind::Review, target, requester);
            fill_homework_relations(world, &mut snap, &r.homework);
            snap.creator = Some(r.creator.clone());
            snap.homework_graded = Some(world.is_graded(r.homework.as_str()));
            snap.review_appended = Some(r.appended_to.is_some());
            snap
        }
        Part::Grade(g) => {
            let mut snap = StateSnapshot::empty(ResourceKind::Grade, target, requester);
            fill_homework_relations(world, &mut snap, &g.homework);
            snap.creator = Some(g.creator.clone());
            snap.appended_review_ids = Some(g.appended_reviews.iter().cloned().collect());
            snap
        }
    }
}

/// Flattens the state around `resource` as seen by `requester`.
///
/// `resource` may be a homework, review or grade id, or an append target
/// `<review>@<grade>`.
pub fn snapshot(world: &WorldState, resource: &str, requester: &UserId) -> Result<StateSnapshot, ModelError> {
    if let Some((left, right)) = split_append_target(resource) {
        let primary = lookup(world, left).ok_or_else(|| ModelError::not_found("resource", left))?;
        let secondary = lookup(world, right).ok_or_else(|| ModelError::not_found("resource", right))?;
        let mut snap = part_snapshot(world, &primary, resource, requester);
        if let Part::Grade(g) = secondary {
            snap.grade_id = Some(g.id.clone());
            snap.grade_creator = Some(g.creator.clone());
            snap.grade_homework_id = Some(g.homework.clone());
            snap.appended_review_ids = Some(g.appended_reviews.iter().cloned().collect());
        }
        return Ok(snap);
    }
    let part = lookup(world, resource).ok_or_else(|| ModelError::not_found("resource", resource))?;
    Ok(part_snapshot(world, &part, resource, requester))
}

/// The snapshot a decision about `request` is made against. Checks that the
/// requester exists; an upload of an unknown id yields an unallocated
/// snapshot instead of not-found.
pub fn snapshot_for_request(world: &WorldState, request: &AccessRequest) -> Result<StateSnapshot, ModelError> {
    if !world.has_user(request.user.as_str()) {
        return Err(ModelError::not_found("user", request.user.as_str()));
    }
    let target = request.resource.as_str();
    if request.action == ActionKind::UploadHomework {
        if target.contains(APPEND_SEPARATOR) {
            return Err(ModelError::InvalidArgument(format!(
                "upload target '{target}' must be a plain homework id"
            )));
        }
        if !world.contains_id(target) {
            return Ok(StateSnapshot::unallocated(target, &request.user));
        }
    }
    snapshot(world, target, &request.user)
}
