//! Synthetic traffic: benign registration sessions, trace interleaving and
//! blind-DoS injection. Everything here is deterministic given its seed.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::l3::{GroundTruth, MessageType, Rnti, TelemetryRecord, Tmsi, UeId};

/// What a session step does with the subscriber identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityAction {
    /// Carry whatever TMSI the UE currently holds (the sentinel 0 before any
    /// assignment).
    CarryCurrent,
    /// The network assigns a fresh identity with this message; a session that
    /// resumes a prior identity keeps it instead.
    AssignFresh,
}

/// Ordered message flow of one benign registration.
#[derive(Debug, Clone)]
pub struct SessionTemplate {
    steps: Vec<(MessageType, IdentityAction)>,
}

impl SessionTemplate {
    /// The canonical eleven-step registration flow. The NAS security-mode
    /// exchange runs before the RRC one.
    pub fn registration() -> Self {
        use IdentityAction::{AssignFresh, CarryCurrent};
        SessionTemplate {
            steps: vec![
                (MessageType::RrcSetupRequest, CarryCurrent),
                (MessageType::RrcSetup, CarryCurrent),
                (MessageType::RrcSetupComplete, CarryCurrent),
                (MessageType::RegistrationRequest, CarryCurrent),
                (MessageType::AuthenticationRequest, CarryCurrent),
                (MessageType::AuthenticationResponse, CarryCurrent),
                (MessageType::NasSecurityModeCommand, CarryCurrent),
                (MessageType::NasSecurityModeComplete, CarryCurrent),
                (MessageType::RrcSecurityModeCommand, CarryCurrent),
                (MessageType::RrcSecurityModeComplete, CarryCurrent),
                (MessageType::RegistrationAccept, AssignFresh),
            ],
        }
    }

    pub fn steps(&self) -> &[(MessageType, IdentityAction)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn fresh_tmsi(rng: &mut impl Rng) -> Tmsi {
    loop {
        let value = rng.random::<u32>();
        if value != 0 {
            return Tmsi(value);
        }
    }
}

/// Generates one benign session for `ue`.
///
/// All records share one random session RNTI and are labeled benign. A UE
/// resuming a prior identity carries that TMSI on every message of the
/// session; a first-time UE carries the sentinel 0 until the final
/// RegistrationAccept assigns a fresh non-zero TMSI. `prior_tmsi` equal to
/// the sentinel counts as no prior identity.
pub fn generate_session(
    ue: &UeId,
    prior_tmsi: Option<Tmsi>,
    seed: u64,
) -> Vec<TelemetryRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rnti = Rnti(rng.random::<u16>());
    let prior = prior_tmsi.filter(|t| t.is_assigned());
    let mut current = prior.unwrap_or(Tmsi::NONE);
    let template = SessionTemplate::registration();
    let mut records = Vec::with_capacity(template.len());
    for (i, (msg_type, action)) in template.steps().iter().enumerate() {
        if *action == IdentityAction::AssignFresh && prior.is_none() {
            current = fresh_tmsi(&mut rng);
        }
        records.push(TelemetryRecord {
            seq: i as u64,
            ue_id: ue.clone(),
            msg_type: msg_type.clone(),
            rnti,
            tmsi: current,
            label: GroundTruth::Benign,
        });
    }
    records
}

/// Rewrites `seq` to match position, contiguous from 0.
pub fn renumber(records: &mut [TelemetryRecord]) {
    for (i, record) in records.iter_mut().enumerate() {
        record.seq = i as u64;
    }
}

/// Drops everything past `len` and renumbers. A `len` beyond the trace is a
/// no-op apart from renumbering.
pub fn truncate_trace(mut trace: Vec<TelemetryRecord>, len: usize) -> Vec<TelemetryRecord> {
    trace.truncate(len);
    renumber(&mut trace);
    trace
}

/// Merges per-UE record streams into one trace, preserving the relative order
/// within each stream. The merge point is drawn in proportion to how many
/// records each stream still holds, so every possible interleaving is equally
/// likely. Output `seq` is renumbered 0..N-1. Deterministic per seed.
pub fn interleave_shuffle(
    per_ue: Vec<Vec<TelemetryRecord>>,
    seed: u64,
) -> Vec<TelemetryRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queues: Vec<std::collections::VecDeque<TelemetryRecord>> =
        per_ue.into_iter().map(Into::into).collect();
    let mut remaining: usize = queues.iter().map(|q| q.len()).sum();
    let mut out = Vec::with_capacity(remaining);
    while remaining > 0 {
        let mut pick = rng.random_range(0..remaining);
        for queue in queues.iter_mut() {
            if pick < queue.len() {
                out.push(queue.pop_front().expect("queue checked non-empty"));
                break;
            }
            pick -= queue.len();
        }
        remaining -= 1;
    }
    renumber(&mut out);
    out
}

/// A TMSI counts as bound once a RegistrationAccept assigned it or a setup
/// request already carried it; either kind of record anchors the identity in
/// the trace.
fn bound_identities(trace: &[TelemetryRecord]) -> Vec<(Tmsi, usize, Rnti)> {
    let mut seen = std::collections::HashSet::new();
    let mut bindings = Vec::new();
    for (idx, record) in trace.iter().enumerate() {
        if !record.tmsi.is_assigned() {
            continue;
        }
        let binds = matches!(
            record.msg_type,
            MessageType::RegistrationAccept | MessageType::RrcSetupRequest
        );
        if binds && seen.insert(record.tmsi) {
            bindings.push((record.tmsi, idx, record.rnti));
        }
    }
    bindings
}

const PLACEMENT_TRIES: usize = 256;
const PLACEMENT_RESTARTS: usize = 64;

/// Inserts `count` blind-DoS records into a copy of `trace`.
///
/// Victim TMSIs are drawn uniformly without replacement from the identities
/// already bound in the trace. Each injected record is an RRCSetupRequest
/// carrying the victim TMSI with a fresh random RNTI different from the
/// victim's, placed strictly after the binding record. With `min_gap > 0`,
/// injected records end up at least `min_gap` positions apart and at least
/// `min_gap` positions from the end of the trace, which keeps window counts
/// over the attacks analytically clean for window sizes up to `min_gap`.
/// Output `seq` is renumbered. Deterministic per seed.
pub fn inject_blind_dos(
    trace: &[TelemetryRecord],
    count: usize,
    min_gap: usize,
    seed: u64,
) -> Result<Vec<TelemetryRecord>> {
    if count == 0 {
        let mut out = trace.to_vec();
        renumber(&mut out);
        return Ok(out);
    }
    let n = trace.len();
    let bindings = bound_identities(trace);
    if bindings.len() < count {
        return Err(Error::InjectionCapacity {
            requested: count,
            available: bindings.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = bindings;

    // Insertion offsets are sampled in source coordinates; a source gap of at
    // least min_gap implies a final gap of at least min_gap once the inserts
    // shift positions. Victims are redrawn on every restart because a victim
    // bound inside the tail margin can have no feasible offset at all.
    let upper = if min_gap > 0 { n.saturating_sub(min_gap) } else { n };
    let placement_error = || Error::InjectionPlacement {
        requested: count,
        min_gap,
        records: n,
    };
    let mut victims: Vec<(Tmsi, usize, Rnti)> = Vec::new();
    let mut offsets: Vec<usize> = Vec::with_capacity(count);
    let mut placed_all = false;
    for _ in 0..PLACEMENT_RESTARTS {
        pool.shuffle(&mut rng);
        let candidates: Vec<(Tmsi, usize, Rnti)> = pool.iter().copied().take(count).collect();
        offsets.clear();
        let mut ok = true;
        for (_, bind_idx, _) in &candidates {
            let low = bind_idx + 1;
            if low > upper {
                ok = false;
                break;
            }
            let mut placed = false;
            for _ in 0..PLACEMENT_TRIES {
                let offset = rng.random_range(low..=upper);
                let spaced = min_gap == 0
                    || offsets.iter().all(|&o| o.abs_diff(offset) >= min_gap);
                if spaced {
                    offsets.push(offset);
                    placed = true;
                    break;
                }
            }
            if !placed {
                ok = false;
                break;
            }
        }
        if ok {
            victims = candidates;
            placed_all = true;
            break;
        }
    }
    if !placed_all {
        return Err(placement_error());
    }

    let mut attacks: Vec<(usize, TelemetryRecord)> = victims
        .iter()
        .zip(&offsets)
        .enumerate()
        .map(|(k, ((tmsi, _, victim_rnti), &offset))| {
            let mut rnti = Rnti(rng.random::<u16>());
            while rnti == *victim_rnti {
                rnti = Rnti(rng.random::<u16>());
            }
            let record = TelemetryRecord {
                seq: 0,
                ue_id: UeId(format!("attacker-{k}")),
                msg_type: MessageType::RrcSetupRequest,
                rnti,
                tmsi: *tmsi,
                label: GroundTruth::BlindDos,
            };
            (offset, record)
        })
        .collect();
    // Stable by offset so equal offsets keep their draw order.
    attacks.sort_by_key(|(offset, _)| *offset);

    let mut out = Vec::with_capacity(n + count);
    let mut next_attack = 0;
    for (idx, record) in trace.iter().enumerate() {
        while next_attack < attacks.len() && attacks[next_attack].0 == idx {
            out.push(attacks[next_attack].1.clone());
            next_attack += 1;
        }
        out.push(record.clone());
    }
    while next_attack < attacks.len() {
        out.push(attacks[next_attack].1.clone());
        next_attack += 1;
    }
    renumber(&mut out);
    Ok(out)
}

/// Generates `ues` first-time UEs with `sessions_per_ue` chained sessions
/// each and interleaves them into one trace. Sessions never resume an earlier
/// TMSI, so a setup request carrying a bound identity can only be an injected
/// attack; that property is what makes rule-based ground truth exact on
/// generated traces.
pub fn generate_benign_trace(
    ues: usize,
    sessions_per_ue: usize,
    seed: u64,
) -> Vec<TelemetryRecord> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut per_ue = Vec::with_capacity(ues);
    for u in 0..ues {
        let ue = UeId(format!("ue-{u}"));
        let mut stream = Vec::new();
        for _ in 0..sessions_per_ue {
            let session_seed = master.next_u64();
            stream.extend(generate_session(&ue, None, session_seed));
        }
        per_ue.push(stream);
    }
    let shuffle_seed = master.next_u64();
    interleave_shuffle(per_ue, shuffle_seed)
}
