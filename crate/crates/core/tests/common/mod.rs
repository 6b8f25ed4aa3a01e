//! Shared fixtures for integration tests: an enumerator over small
//! classroom worlds and a brute-force policy checker that reads the raw
//! world maps directly.

#![allow(dead_code)]

use std::collections::BTreeSet;

use provac::model::{
    AccessRequest, ActionKind, Grade, Homework, Review, ReviewId, Timestamp, Version,
    WorldState,
};
use provac::oracle::Verdict;

pub const USERS: [&str; 4] = ["u1", "u2", "u3", "u4"];
pub const STRANGER: &str = "u9";

pub fn t0() -> Timestamp {
    "2025-01-06T09:00:00Z".parse().unwrap()
}

/// One homework in a small world.
#[derive(Clone, Debug)]
pub struct HwSpec {
    pub author: usize,
    pub submitted: bool,
    /// Review creators, in creation order.
    pub reviewers: Vec<usize>,
    /// Grade creator and a bitmask over `reviewers` of appended reviews.
    pub grade: Option<(usize, u32)>,
}

/// Builds a world from homework specs with the raw constructors, so states
/// the workflow would never reach (self-review, early grades) are allowed.
pub fn build_world(specs: &[HwSpec]) -> WorldState {
    let mut w = WorldState::new(USERS.len(), 0).unwrap();
    let mut next_review = 1;
    for (h, spec) in specs.iter().enumerate() {
        let hw_id = format!("hw{}", h + 1);
        let author = USERS[spec.author];
        w.insert_homework(Homework {
            id: hw_id.as_str().into(),
            author: author.into(),
            versions: vec![Version {
                id: format!("v{}", h + 1).as_str().into(),
                uploader: author.into(),
                at: t0(),
            }],
            submitted: spec.submitted,
            submitted_at: spec.submitted.then(t0),
        })
        .unwrap();
        let mut ids = Vec::new();
        for &r in &spec.reviewers {
            let id = format!("rv{next_review}");
            next_review += 1;
            w.insert_review(Review {
                id: id.as_str().into(),
                homework: hw_id.as_str().into(),
                creator: USERS[r].into(),
                created_at: t0(),
                revision_count: 0,
                appended_to: None,
            })
            .unwrap();
            ids.push(id);
        }
        if let Some((creator, mask)) = spec.grade {
            let appended: BTreeSet<ReviewId> = ids
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, id)| ReviewId::from(id.as_str()))
                .collect();
            w.insert_grade(Grade {
                id: format!("g{}", h + 1).as_str().into(),
                homework: hw_id.as_str().into(),
                creator: USERS[creator].into(),
                created_at: t0(),
                appended_reviews: appended,
            })
            .unwrap();
        }
    }
    w
}

fn sequences(choices: &[usize], max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in choices {
                let mut t: Vec<usize> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn grade_options(n_reviews: usize, graders: &[usize], masks: Option<&[u32]>) -> Vec<Option<(usize, u32)>> {
    let mut out = vec![None];
    let all: Vec<u32> = (0..1u32 << n_reviews).collect();
    let masks: Vec<u32> = match masks {
        Some(m) => m.iter().copied().filter(|m| *m < 1 << n_reviews).collect::<BTreeSet<_>>().into_iter().collect(),
        None => all,
    };
    for &g in graders {
        for &m in &masks {
            out.push(Some((g, m)));
        }
    }
    out
}

/// Every small world in the test space.
///
/// Users are interchangeable, so the first homework's author is fixed to
/// `u1`; requesters still range over all users.
/// * One homework: both submission flags, up to three reviews by any user
///   with any grader and any appended subset, plus four-review worlds with
///   a reduced set of appended subsets.
/// * Two homeworks (authors `u1`, `u2`): up to two reviews each by the
///   non-authors' pool, each optionally graded with any appended subset.
pub fn for_each_world(mut f: impl FnMut(&WorldState)) {
    let all: Vec<usize> = (0..USERS.len()).collect();
    for submitted in [false, true] {
        for reviewers in sequences(&all, 4) {
            let masks: Option<&[u32]> = if reviewers.len() == 4 { Some(&[0, 1, 0b1111]) } else { None };
            for grade in grade_options(reviewers.len(), &all, masks) {
                f(&build_world(&[HwSpec { author: 0, submitted, reviewers: reviewers.clone(), grade }]));
            }
        }
    }
    let pool1 = [1, 2, 3];
    let pool2 = [0, 2, 3];
    for submitted2 in [false, true] {
        for r1 in sequences(&pool1, 2) {
            for g1 in grade_options(r1.len(), &[2], None) {
                for r2 in sequences(&pool2, 2) {
                    for g2 in grade_options(r2.len(), &[3], None) {
                        f(&build_world(&[
                            HwSpec { author: 0, submitted: true, reviewers: r1.clone(), grade: g1 },
                            HwSpec { author: 1, submitted: submitted2, reviewers: r2.clone(), grade: g2 },
                        ]));
                    }
                }
            }
        }
    }
}

/// Every request considered against `world`: each user with each action
/// on its natural targets, plus wrong-kind and unknown targets and one
/// request from an unregistered user.
pub fn requests_for(world: &WorldState) -> Vec<AccessRequest> {
    let homeworks: Vec<String> = world.homeworks().keys().map(|k| k.as_str().to_owned()).collect();
    let reviews: Vec<String> = world.reviews().keys().map(|k| k.as_str().to_owned()).collect();
    let grades: Vec<String> = world.grades().keys().map(|k| k.as_str().to_owned()).collect();
    let some_review = reviews.first().cloned().unwrap_or_else(|| "rv9".into());

    let mut hw_targets = homeworks.clone();
    hw_targets.push("hw9".into());
    hw_targets.push(some_review.clone());

    let mut revise_targets = reviews.clone();
    revise_targets.push("rv9".into());
    revise_targets.push(homeworks[0].clone());

    let mut append_targets = Vec::new();
    for r in &reviews {
        for g in &grades {
            append_targets.push(format!("{r}@{g}"));
        }
    }
    append_targets.push(some_review.clone());
    append_targets.push(format!("{some_review}@{}", homeworks[0]));
    append_targets.push("rv9@g1".into());

    let mut out = Vec::new();
    let mut push = |user: &str, action: ActionKind, target: &str| {
        out.push(AccessRequest::new(format!("q{}", out.len()), user, action, target, t0()));
    };
    for user in USERS {
        for target in ["hw9", homeworks[0].as_str(), "hw1@g1"] {
            push(user, ActionKind::UploadHomework, target);
        }
        for action in [
            ActionKind::ReplaceHomework,
            ActionKind::SubmitHomework,
            ActionKind::ReviewHomework,
            ActionKind::GradeHomework,
        ] {
            for t in &hw_targets {
                push(user, action, t);
            }
        }
        for t in &revise_targets {
            push(user, ActionKind::ReviseReview, t);
        }
        for t in &append_targets {
            push(user, ActionKind::AppendReviewToGrade, t);
        }
    }
    push(STRANGER, ActionKind::SubmitHomework, &homeworks[0]);
    out
}

/// Expected outcome of one request: `None` when the request must be
/// rejected as malformed (unknown user or target).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expected {
    pub verdict: Verdict,
    pub policy: &'static str,
    pub violated: BTreeSet<&'static str>,
}

pub fn conditions_of_policy(policy: &str) -> &'static [&'static str] {
    match policy {
        "P2" => &["P2.is_author", "P2.not_submitted"],
        "P3" => &["P3.is_author", "P3.not_submitted"],
        "P4" => &[
            "P4.submitted",
            "P4.not_author",
            "P4.not_prior_reviewer",
            "P4.review_count_lt_3",
            "P4.ungraded",
        ],
        "P5" => &["P5.is_creator", "P5.ungraded"],
        "P6" => &["P6.min_two_reviews", "P6.not_already_graded"],
        "P7" => &["P7.is_grade_creator", "P7.review_matches_grade", "P7.not_already_appended"],
        _ => &[],
    }
}

fn policy_of(action: ActionKind) -> &'static str {
    match action {
        ActionKind::UploadHomework => "P1",
        ActionKind::ReplaceHomework => "P2",
        ActionKind::SubmitHomework => "P3",
        ActionKind::ReviewHomework => "P4",
        ActionKind::ReviseReview => "P5",
        ActionKind::GradeHomework => "P6",
        ActionKind::AppendReviewToGrade => "P7",
    }
}

fn exists(w: &WorldState, id: &str) -> bool {
    w.homeworks().keys().any(|k| k.as_str() == id)
        || w.reviews().keys().any(|k| k.as_str() == id)
        || w.grades().keys().any(|k| k.as_str() == id)
}

fn reviews_on<'a>(w: &'a WorldState, hw: &str) -> impl Iterator<Item = &'a Review> + 'a {
    let hw = hw.to_owned();
    w.reviews().values().filter(move |r| r.homework.as_str() == hw)
}

fn graded(w: &WorldState, hw: &str) -> bool {
    w.grades().values().any(|g| g.homework.as_str() == hw)
}

/// Decides a request by reading the world directly, without snapshots or
/// the library's condition evaluator.
pub fn brute_force(w: &WorldState, req: &AccessRequest) -> Option<Expected> {
    let user = req.user.as_str();
    if !w.users().iter().any(|u| u.as_str() == user) {
        return None;
    }
    let target = req.resource.as_str();
    let policy = policy_of(req.action);
    let all = conditions_of_policy(policy);
    let outcome = |failed: Vec<&'static str>| {
        Some(Expected {
            verdict: if failed.is_empty() { Verdict::Allow } else { Verdict::Deny },
            policy,
            violated: failed.into_iter().collect(),
        })
    };
    let wrong_kind = || {
        Some(Expected {
            verdict: Verdict::Deny,
            policy,
            violated: all.iter().copied().collect(),
        })
    };

    if req.action == ActionKind::UploadHomework {
        return if target.contains('@') { None } else { outcome(vec![]) };
    }

    let (left, right) = match target.split_once('@') {
        Some((l, r)) => (l, Some(r)),
        None => (target, None),
    };
    if !exists(w, left) || right.is_some_and(|r| !exists(w, r)) {
        return None;
    }
    let grade = right.and_then(|r| w.grades().values().find(|g| g.id.as_str() == r));

    let check = |pairs: &[(&'static str, bool)]| outcome(pairs.iter().filter(|(_, ok)| !ok).map(|(c, _)| *c).collect());

    match req.action {
        ActionKind::ReplaceHomework | ActionKind::SubmitHomework | ActionKind::ReviewHomework | ActionKind::GradeHomework => {
            let Some(hw) = w.homeworks().values().find(|h| h.id.as_str() == left) else {
                return wrong_kind();
            };
            let id = hw.id.as_str();
            let is_author = hw.author.as_str() == user;
            let n_reviews = reviews_on(w, id).count();
            let reviewed = reviews_on(w, id).any(|r| r.creator.as_str() == user);
            match req.action {
                ActionKind::ReplaceHomework => check(&[("P2.is_author", is_author), ("P2.not_submitted", !hw.submitted)]),
                ActionKind::SubmitHomework => check(&[("P3.is_author", is_author), ("P3.not_submitted", !hw.submitted)]),
                ActionKind::ReviewHomework => check(&[
                    ("P4.submitted", hw.submitted),
                    ("P4.not_author", !is_author),
                    ("P4.not_prior_reviewer", !reviewed),
                    ("P4.review_count_lt_3", n_reviews < 3),
                    ("P4.ungraded", !graded(w, id)),
                ]),
                _ => check(&[
                    ("P6.min_two_reviews", n_reviews >= 2),
                    ("P6.not_already_graded", !graded(w, id)),
                ]),
            }
        }
        ActionKind::ReviseReview => {
            let review = w.reviews().values().find(|r| r.id.as_str() == left);
            match review {
                Some(r) if grade.is_none() => check(&[
                    ("P5.is_creator", r.creator.as_str() == user),
                    ("P5.ungraded", !graded(w, r.homework.as_str())),
                ]),
                _ => wrong_kind(),
            }
        }
        ActionKind::AppendReviewToGrade => {
            let review = w.reviews().values().find(|r| r.id.as_str() == left);
            match (review, grade) {
                (Some(r), Some(g)) => check(&[
                    ("P7.is_grade_creator", g.creator.as_str() == user),
                    ("P7.review_matches_grade", r.homework == g.homework),
                    ("P7.not_already_appended", !w.grades().values().any(|x| x.appended_reviews.contains(&r.id))),
                ]),
                _ => wrong_kind(),
            }
        }
        ActionKind::UploadHomework => unreachable!(),
    }
}


pub mod dsl_gen;
