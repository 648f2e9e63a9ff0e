//! Description linting: six content predicates, alignment grouping and
//! predicate-driven completion of partial descriptions.

use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

/// Which of the six content predicates a description body satisfies.
///
/// P1: names the RRCSetupRequest trigger message. P2: mentions the TMSI (or
/// a temporary-identifier paraphrase). P3: ties the identifier to a victim
/// or existing connection. P4: describes the spoofing/impersonation act.
/// P5: mentions the fresh RNTI. P6: mentions missing integrity protection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PredicateCoverage {
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
    pub p4: bool,
    pub p5: bool,
    pub p6: bool,
}

impl PredicateCoverage {
    pub fn satisfied(&self) -> usize {
        [self.p1, self.p2, self.p3, self.p4, self.p5, self.p6]
            .iter()
            .filter(|p| **p)
            .count()
    }
}

/// How closely a description matches the attack definition. [`Ordering`] of
/// the variants runs from best to worst alignment.
///
/// [`Ordering`]: std::cmp::Ordering
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AlignmentGroup {
    /// Trigger, identifier, victim linkage and the spoofing act all present.
    DirectlyAligned,
    /// Trigger and identifier present, plus victim linkage or the act.
    CloselyAligned,
    /// Trigger present with at least one other substantive predicate.
    SomewhatAligned,
    /// Trigger absent, or present with nothing else.
    NotAligned,
}

impl AlignmentGroup {
    pub const ALL: [AlignmentGroup; 4] = [
        AlignmentGroup::DirectlyAligned,
        AlignmentGroup::CloselyAligned,
        AlignmentGroup::SomewhatAligned,
        AlignmentGroup::NotAligned,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlignmentGroup::DirectlyAligned => "directly_aligned",
            AlignmentGroup::CloselyAligned => "closely_aligned",
            AlignmentGroup::SomewhatAligned => "somewhat_aligned",
            AlignmentGroup::NotAligned => "not_aligned",
        }
    }
}

static P1_TRIGGER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)rrc[\s_-]*setup[\s_-]*request").expect("static pattern")
});
static P2_IDENTIFIER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\btmsi\b|temporary[\s_-]*(mobile[\s_-]*subscriber[\s_-]*)?ident")
        .expect("static pattern")
});
static P3_VICTIM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\bvictim|legitimate\s+(ue|user|subscriber|device)|\bin[\s_-]+use\b|existing\s+(connection|ue|user|session)|already[\s_-]*connected|active\s+(connection|session|ue)",
    )
    .expect("static pattern")
});
static P4_SPOOF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(spoof|impersonat|reus|re-us|assum|hijack|masquerad)").expect("static pattern")
});
static P5_RNTI: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\brnti\b").expect("static pattern"));
static P5_FRESHNESS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(new|different|distinct|fresh|another)\b").expect("static pattern")
});
static P6_INTEGRITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)integrity").expect("static pattern"));
static P6_ABSENCE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(without|lack\w*|absence|absent|no|not|missing|unprotected)\b")
        .expect("static pattern")
});

/// Evaluates all six predicates against a description body.
pub fn lint_description(body: &str) -> PredicateCoverage {
    PredicateCoverage {
        p1: P1_TRIGGER.is_match(body),
        p2: P2_IDENTIFIER.is_match(body),
        p3: P3_VICTIM.is_match(body),
        p4: P4_SPOOF.is_match(body),
        p5: P5_RNTI.is_match(body) && P5_FRESHNESS.is_match(body),
        p6: P6_INTEGRITY.is_match(body) && P6_ABSENCE.is_match(body),
    }
}

/// Maps predicate coverage onto an alignment group.
///
/// P5 has no bearing on the grouping: spotting the fresh RNTI is recorded by
/// the lint but grouping rests on the trigger, the identifier, the victim
/// linkage, the act and the integrity gap.
pub fn classify_alignment(coverage: PredicateCoverage) -> AlignmentGroup {
    let PredicateCoverage {
        p1, p2, p3, p4, p6, ..
    } = coverage;
    if p1 && p2 && p3 && p4 {
        AlignmentGroup::DirectlyAligned
    } else if p1 && p2 && (p3 || p4) {
        AlignmentGroup::CloselyAligned
    } else if p1 && (p2 || p3 || p4 || p6) {
        AlignmentGroup::SomewhatAligned
    } else {
        AlignmentGroup::NotAligned
    }
}

const P1_CLAUSE: &str = "The attack is triggered by an RRCSetupRequest message.";
const P2_CLAUSE: &str = "The request carries a TMSI value.";
const P3_CLAUSE: &str = "That TMSI identifies a victim UE with an existing connection.";
const P4_CLAUSE: &str = "The attacker spoofs this TMSI to impersonate the victim.";

/// Appends one canned clause per missing core predicate (trigger,
/// identifier, victim linkage, act), in that order; the result always lints
/// as directly aligned. A body already covering all four returns unchanged.
pub fn complete_description(body: &str, coverage: PredicateCoverage) -> String {
    let mut out = body.trim_end().to_string();
    let additions = [
        (coverage.p1, P1_CLAUSE),
        (coverage.p2, P2_CLAUSE),
        (coverage.p3, P3_CLAUSE),
        (coverage.p4, P4_CLAUSE),
    ];
    for (covered, clause) in additions {
        if !covered {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(clause);
        }
    }
    out
}
