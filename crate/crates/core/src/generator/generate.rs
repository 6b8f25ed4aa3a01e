//! Trajectory simulation.
//!
//! Each homework is one workflow instance. Every step picks an action
//! (uniformly, unless an action is falling behind its minimum share),
//! then either a legitimate request for it or a request that violates
//! exactly one of its policy's conditions (the currently reachable
//! condition with the fewest violations so far). The request is labelled by the
//! oracle against the current state; allowed requests usually advance the
//! state.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatasetRecord, GeneratorConfig, GeneratorError};
use crate::model::{
    append_target, snapshot_for_request, AccessRequest, ActionKind, GradeId, Homework, ResourceId, Review,
    ReviewId, Timestamp, UserId, WorldState,
};
use crate::oracle::{Condition, Oracle};

/// First timestamp of every generated dataset.
pub const BASE_TIME: &str = "2025-01-06T09:00:00Z";
/// Seconds between consecutive requests are drawn from `1..=MAX_GAP_SECS`.
pub const MAX_GAP_SECS: i64 = 600;
/// Chance that a legitimate review goes to one of the most-reviewed
/// eligible homeworks, which keeps homeworks moving towards grading.
const PREFER_BUSY_REVIEW: f64 = 0.7;
/// Chance that a legitimate grade goes to a homework with exactly two
/// reviews, so fully reviewed homeworks stay ungraded for a while.
const PREFER_FRESH_GRADE: f64 = 0.7;

/// Generates `config.num_records` labelled records.
pub fn generate(config: &GeneratorConfig) -> Result<Vec<DatasetRecord>, GeneratorError> {
    generate_with_trace(config).map(|(records, _)| records)
}

/// Like [`generate`], also returning the requests that were applied to the
/// state, in order.
pub fn generate_with_trace(config: &GeneratorConfig) -> Result<(Vec<DatasetRecord>, Vec<AccessRequest>), GeneratorError> {
    config.validate()?;
    let mut sim = Sim::new(config)?;
    for _ in 0..config.num_records {
        sim.step()?;
    }
    sim.check_shares()?;
    Ok((sim.records, sim.applied))
}

/// The workflow step whose legitimate execution enables `action`.
fn prerequisite(action: ActionKind) -> Option<ActionKind> {
    use ActionKind::*;
    match action {
        UploadHomework => None,
        ReplaceHomework | SubmitHomework => Some(UploadHomework),
        ReviewHomework => Some(SubmitHomework),
        ReviseReview | GradeHomework => Some(ReviewHomework),
        AppendReviewToGrade => Some(GradeHomework),
    }
}

fn cond_index(c: Condition) -> usize {
    Condition::ALL.iter().position(|x| *x == c).expect("listed condition")
}

/// A sampled request target: who asks and what they name.
struct Draft {
    user: UserId,
    target: String,
}

struct Sim<'a> {
    cfg: &'a GeneratorConfig,
    rng: ChaCha8Rng,
    world: WorldState,
    users: Vec<UserId>,
    clock: Timestamp,
    next_homework: u64,
    counts: [usize; 7],
    violations: [usize; Condition::ALL.len()],
    records: Vec<DatasetRecord>,
    applied: Vec<AccessRequest>,
    oracle: &'static Oracle,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a GeneratorConfig) -> Result<Self, GeneratorError> {
        let world = WorldState::new(cfg.num_users, 0)?;
        let users = world.users().iter().cloned().collect();
        Ok(Sim {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            world,
            users,
            clock: BASE_TIME.parse().expect("valid base time"),
            next_homework: 1,
            counts: [0; 7],
            violations: [0; Condition::ALL.len()],
            records: Vec::with_capacity(cfg.num_records),
            applied: Vec::new(),
            oracle: Oracle::builtin(),
        })
    }

    fn deficits(&self) -> [usize; 7] {
        let need = self.cfg.min_per_action();
        self.counts.map(|c| need.saturating_sub(c))
    }

    fn step(&mut self) -> Result<(), GeneratorError> {
        let remaining = self.cfg.num_records - self.records.len();
        let deficits = self.deficits();
        let owed: usize = deficits.iter().sum();
        // Once owed records take half of what is left, steer towards them;
        // once they take all of it, nothing else may be sampled.
        let steer = owed > 0 && 2 * owed >= remaining;
        let forced = owed > 0 && owed >= remaining;
        let invalid = self.rng.random_bool(self.cfg.invalid_request_rate);
        let first = if steer {
            let max = *deficits.iter().max().unwrap_or(&0);
            let owing: Vec<ActionKind> = ActionKind::ALL
                .into_iter()
                .filter(|a| deficits[a.index()] == max)
                .collect();
            *owing.choose(&mut self.rng).expect("some action owes records")
        } else {
            *ActionKind::ALL.choose(&mut self.rng).expect("seven actions")
        };
        let picked = match self.draft_for(first, invalid) {
            Some(d) => Some((first, d)),
            None if forced => self.fallback(first, invalid, true, &deficits).or_else(|| self.enabling(first)),
            None => self.enabling(first).or_else(|| self.fallback(first, invalid, false, &deficits)),
        };
        let (action, draft) = picked.ok_or(GeneratorError::Infeasible {
            action: first,
            needed: self.cfg.min_per_action(),
            got: self.counts[first.index()],
        })?;
        self.emit(action, draft)
    }

    /// A legitimate request for the nearest workflow step that makes
    /// `blocked` possible again.
    fn enabling(&mut self, blocked: ActionKind) -> Option<(ActionKind, Draft)> {
        let mut at = blocked;
        while let Some(prev) = prerequisite(at) {
            if let Some(d) = self.legitimate(prev) {
                return Some((prev, d));
            }
            at = prev;
        }
        None
    }

    /// Some other action when `tried` has nothing to sample: one still
    /// owing records if possible, otherwise any feasible one.
    fn fallback(
        &mut self,
        tried: ActionKind,
        invalid: bool,
        forced: bool,
        deficits: &[usize; 7],
    ) -> Option<(ActionKind, Draft)> {
        let mut order: Vec<ActionKind> = ActionKind::ALL.into_iter().filter(|a| *a != tried).collect();
        // Shuffle, then put actions that owe records first.
        for i in (1..order.len()).rev() {
            let j = self.rng.random_range(0..=i);
            order.swap(i, j);
        }
        order.sort_by_key(|a| std::cmp::Reverse(deficits[a.index()]));
        for action in order {
            if forced && deficits[action.index()] == 0 {
                continue;
            }
            if let Some(d) = self.draft_for(action, invalid) {
                return Some((action, d));
            }
        }
        None
    }

    fn draft_for(&mut self, action: ActionKind, invalid: bool) -> Option<Draft> {
        if invalid {
            self.violating(action).or_else(|| self.legitimate(action))
        } else {
            self.legitimate(action).or_else(|| self.violating(action))
        }
    }

    fn emit(&mut self, action: ActionKind, draft: Draft) -> Result<(), GeneratorError> {
        let gap = self.rng.random_range(1..=MAX_GAP_SECS);
        self.clock = self.clock.plus_seconds(gap);
        let id = format!("r{:05}", self.records.len() + 1);
        let request = AccessRequest::new(id, draft.user, action, draft.target, self.clock);
        let snap = snapshot_for_request(&self.world, &request)?;
        let decision = self.oracle.decide_snapshot(&snap, &request);
        if decision.is_allow() && self.rng.random_bool(self.cfg.execute_probability) {
            self.world.apply_in_place(&request)?;
            self.applied.push(request.clone());
        }
        self.counts[action.index()] += 1;
        self.records.push(DatasetRecord::new(&request, snap, &decision));
        Ok(())
    }

    fn check_shares(&self) -> Result<(), GeneratorError> {
        let need = self.cfg.min_per_action();
        for a in ActionKind::ALL {
            if self.counts[a.index()] < need {
                return Err(GeneratorError::Infeasible {
                    action: a,
                    needed: need,
                    got: self.counts[a.index()],
                });
            }
        }
        Ok(())
    }

    // --- sampling helpers -------------------------------------------------

    fn pick_user(&mut self, allowed: impl Fn(&UserId) -> bool) -> Option<UserId> {
        let pool: Vec<&UserId> = self.users.iter().filter(|u| allowed(u)).collect();
        pool.choose(&mut self.rng).map(|u| (*u).clone())
    }

    fn reviewers(&self, hw: &str) -> Vec<UserId> {
        self.world
            .reviews_of(hw)
            .iter()
            .filter_map(|r| self.world.review(r.as_str()))
            .map(|r| r.creator.clone())
            .collect()
    }

    fn homeworks_where(&self, pred: impl Fn(&Homework, usize, bool) -> bool) -> Vec<ResourceId> {
        self.world
            .homeworks()
            .values()
            .filter(|h| {
                let id = h.id.as_str();
                pred(h, self.world.review_count(id), self.world.is_graded(id))
            })
            .map(|h| h.id.clone())
            .collect()
    }

    fn reviews_where(&self, pred: impl Fn(&Review, bool) -> bool) -> Vec<ReviewId> {
        self.world
            .reviews()
            .values()
            .filter(|r| pred(r, self.world.is_graded(r.homework.as_str())))
            .map(|r| r.id.clone())
            .collect()
    }

    fn homework_draft(&mut self, hws: &[ResourceId], user: impl Fn(&Homework, &[UserId], &UserId) -> bool) -> Option<Draft> {
        let hw_id = hws.choose(&mut self.rng)?.clone();
        let hw = self.world.homework(hw_id.as_str())?.clone();
        let reviewers = self.reviewers(hw_id.as_str());
        let u = self.pick_user(|u| user(&hw, &reviewers, u))?;
        Some(Draft {
            user: u,
            target: hw_id.to_string(),
        })
    }

    fn legitimate(&mut self, action: ActionKind) -> Option<Draft> {
        match action {
            ActionKind::UploadHomework => {
                let user = self.users.choose(&mut self.rng)?.clone();
                let mut id = format!("hw{}", self.next_homework);
                while self.world.contains_id(&id) {
                    self.next_homework += 1;
                    id = format!("hw{}", self.next_homework);
                }
                self.next_homework += 1;
                Some(Draft { user, target: id })
            }
            ActionKind::ReplaceHomework | ActionKind::SubmitHomework => {
                let hws = self.homeworks_where(|h, _, _| !h.submitted);
                self.homework_draft(&hws, |h, _, u| *u == h.author)
            }
            ActionKind::ReviewHomework => {
                let mut hws = self.homeworks_where(|h, n, g| h.submitted && n < 3 && !g);
                if self.rng.random_bool(PREFER_BUSY_REVIEW) {
                    let max = hws.iter().map(|h| self.world.review_count(h.as_str())).max();
                    hws.retain(|h| Some(self.world.review_count(h.as_str())) == max);
                }
                self.homework_draft(&hws, |h, rs, u| *u != h.author && !rs.contains(u))
            }
            ActionKind::ReviseReview => {
                let rvs = self.reviews_where(|_, graded| !graded);
                let rv = rvs.choose(&mut self.rng)?;
                let creator = self.world.review(rv.as_str())?.creator.clone();
                Some(Draft {
                    user: creator,
                    target: rv.to_string(),
                })
            }
            ActionKind::GradeHomework => {
                let mut hws = self.homeworks_where(|_, n, g| n >= 2 && !g);
                if self.rng.random_bool(PREFER_FRESH_GRADE) && hws.iter().any(|h| self.world.review_count(h.as_str()) == 2) {
                    hws.retain(|h| self.world.review_count(h.as_str()) == 2);
                }
                self.homework_draft(&hws, |_, _, _| true)
            }
            ActionKind::AppendReviewToGrade => {
                let pairs = self.append_pairs(|r, g| r.appended_to.is_none() && r.homework == g.homework);
                let (rv, gr, creator) = pairs.choose(&mut self.rng)?.clone();
                Some(Draft {
                    user: creator,
                    target: append_target(&rv, &gr).to_string(),
                })
            }
        }
    }

    /// (review, grade, grade creator) for every review of a graded homework
    /// that satisfies `pred`. Only reviews of the grade's own homework are
    /// listed; mismatched pairs are sampled separately.
    fn append_pairs(&self, pred: impl Fn(&Review, &crate::model::Grade) -> bool) -> Vec<(ReviewId, GradeId, UserId)> {
        let mut out = Vec::new();
        for g in self.world.grades().values() {
            for rid in self.world.reviews_of(g.homework.as_str()) {
                if let Some(r) = self.world.review(rid.as_str()) {
                    if pred(r, g) {
                        out.push((r.id.clone(), g.id.clone(), g.creator.clone()));
                    }
                }
            }
        }
        out
    }

    /// Conditions of `action`'s policy that can currently be violated on
    /// their own.
    fn violation_menu(&self, action: ActionKind) -> Vec<Condition> {
        use Condition::*;
        let w = &self.world;
        let any_hw = |pred: &dyn Fn(&Homework, usize, bool) -> bool| {
            w.homeworks()
                .values()
                .any(|h| pred(h, w.review_count(h.id.as_str()), w.is_graded(h.id.as_str())))
        };
        let any_review = |pred: &dyn Fn(&Review, bool) -> bool| {
            w.reviews().values().any(|r| pred(r, w.is_graded(r.homework.as_str())))
        };
        let mut menu = Vec::new();
        let mut offer = |c: Condition, ok: bool| {
            if ok {
                menu.push(c);
            }
        };
        match action {
            ActionKind::UploadHomework => {}
            ActionKind::ReplaceHomework | ActionKind::SubmitHomework => {
                let (author, fresh) = if action == ActionKind::ReplaceHomework {
                    (P2IsAuthor, P2NotSubmitted)
                } else {
                    (P3IsAuthor, P3NotSubmitted)
                };
                offer(author, any_hw(&|h, _, _| !h.submitted));
                offer(fresh, any_hw(&|h, _, _| h.submitted));
            }
            ActionKind::ReviewHomework => {
                let open = |h: &Homework, n: usize, g: bool| h.submitted && n < 3 && !g;
                offer(P4Submitted, any_hw(&|h, _, _| !h.submitted));
                offer(P4NotAuthor, any_hw(&open));
                offer(P4NotPriorReviewer, any_hw(&|h, n, g| open(h, n, g) && n >= 1));
                offer(P4ReviewCountLt3, any_hw(&|h, n, g| h.submitted && n >= 3 && !g));
                offer(P4Ungraded, any_hw(&|h, n, g| h.submitted && n < 3 && g));
            }
            ActionKind::ReviseReview => {
                offer(P5IsCreator, any_review(&|_, g| !g));
                offer(P5Ungraded, any_review(&|_, g| g));
            }
            ActionKind::GradeHomework => {
                offer(P6MinTwoReviews, any_hw(&|_, n, g| n < 2 && !g));
                offer(P6NotAlreadyGraded, any_hw(&|_, _, g| g));
            }
            ActionKind::AppendReviewToGrade => {
                let open = self.append_pairs(|r, _| r.appended_to.is_none());
                offer(P7IsGradeCreator, !open.is_empty());
                offer(P7ReviewMatchesGrade, self.mismatch_grades().iter().any(|(_, n)| *n > 0));
                offer(P7NotAlreadyAppended, any_review(&|r, _| r.appended_to.is_some()));
            }
        }
        menu
    }

    /// Grades paired with how many unappended reviews of other homeworks
    /// exist.
    fn mismatch_grades(&self) -> Vec<(GradeId, usize)> {
        let unappended: Vec<&Review> = self.world.reviews().values().filter(|r| r.appended_to.is_none()).collect();
        self.world
            .grades()
            .values()
            .map(|g| {
                let n = unappended.iter().filter(|r| r.homework != g.homework).count();
                (g.id.clone(), n)
            })
            .collect()
    }

    fn violating(&mut self, action: ActionKind) -> Option<Draft> {
        let menu = self.violation_menu(action);
        // Least-used condition first, so rarely reachable ones still show up.
        let fewest = menu.iter().map(|c| self.violations[cond_index(*c)]).min()?;
        let starved: Vec<Condition> = menu.into_iter().filter(|c| self.violations[cond_index(*c)] == fewest).collect();
        let cond = *starved.choose(&mut self.rng)?;
        let draft = self.violating_draft(cond);
        if draft.is_some() {
            self.violations[cond_index(cond)] += 1;
        }
        draft
    }

    fn violating_draft(&mut self, cond: Condition) -> Option<Draft> {
        use Condition::*;
        match cond {
            P2IsAuthor | P3IsAuthor => {
                let hws = self.homeworks_where(|h, _, _| !h.submitted);
                self.homework_draft(&hws, |h, _, u| *u != h.author)
            }
            P2NotSubmitted | P3NotSubmitted => {
                let hws = self.homeworks_where(|h, _, _| h.submitted);
                self.homework_draft(&hws, |h, _, u| *u == h.author)
            }
            P4Submitted => {
                let hws = self.homeworks_where(|h, _, _| !h.submitted);
                self.homework_draft(&hws, |h, _, u| *u != h.author)
            }
            P4NotAuthor => {
                let hws = self.homeworks_where(|h, n, g| h.submitted && n < 3 && !g);
                self.homework_draft(&hws, |h, _, u| *u == h.author)
            }
            P4NotPriorReviewer => {
                let hws = self.homeworks_where(|h, n, g| h.submitted && (1..3).contains(&n) && !g);
                self.homework_draft(&hws, |_, rs, u| rs.contains(u))
            }
            P4ReviewCountLt3 => {
                let hws = self.homeworks_where(|h, n, g| h.submitted && n >= 3 && !g);
                self.homework_draft(&hws, |h, rs, u| *u != h.author && !rs.contains(u))
            }
            P4Ungraded => {
                let hws = self.homeworks_where(|h, n, g| h.submitted && n < 3 && g);
                self.homework_draft(&hws, |h, rs, u| *u != h.author && !rs.contains(u))
            }
            P5IsCreator | P5Ungraded => {
                let want_graded = cond == P5Ungraded;
                let rvs = self.reviews_where(|_, g| g == want_graded);
                let rv = rvs.choose(&mut self.rng)?.clone();
                let creator = self.world.review(rv.as_str())?.creator.clone();
                let user = if want_graded {
                    creator
                } else {
                    self.pick_user(|u| *u != creator)?
                };
                Some(Draft {
                    user,
                    target: rv.to_string(),
                })
            }
            P6MinTwoReviews => {
                let hws = self.homeworks_where(|_, n, g| n < 2 && !g);
                self.homework_draft(&hws, |_, _, _| true)
            }
            P6NotAlreadyGraded => {
                let hws = self.homeworks_where(|_, _, g| g);
                self.homework_draft(&hws, |_, _, _| true)
            }
            P7IsGradeCreator => {
                let pairs = self.append_pairs(|r, _| r.appended_to.is_none());
                let (rv, gr, creator) = pairs.choose(&mut self.rng)?.clone();
                let user = self.pick_user(|u| *u != creator)?;
                Some(Draft {
                    user,
                    target: append_target(&rv, &gr).to_string(),
                })
            }
            P7ReviewMatchesGrade => {
                let grades: Vec<GradeId> = self
                    .mismatch_grades()
                    .into_iter()
                    .filter(|(_, n)| *n > 0)
                    .map(|(g, _)| g)
                    .collect();
                let gr = grades.choose(&mut self.rng)?.clone();
                let grade = self.world.grade(gr.as_str())?.clone();
                let rvs = self.reviews_where(|r, _| r.appended_to.is_none() && r.homework != grade.homework);
                let rv = rvs.choose(&mut self.rng)?;
                Some(Draft {
                    user: grade.creator.clone(),
                    target: append_target(rv, &gr).to_string(),
                })
            }
            P7NotAlreadyAppended => {
                let rvs = self.reviews_where(|r, _| r.appended_to.is_some());
                let rv = rvs.choose(&mut self.rng)?.clone();
                let gr = self.world.review(rv.as_str())?.appended_to.clone()?;
                let creator = self.world.grade(gr.as_str())?.creator.clone();
                Some(Draft {
                    user: creator,
                    target: append_target(&rv, &gr).to_string(),
                })
            }
        }
    }
}
