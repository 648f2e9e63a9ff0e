//! Layer-3 signalling domain model.
//!
//! A [`TelemetryRecord`] is one decoded control-plane message as it appears in
//! the shared data layer: the message type, the cell-local radio identity
//! (RNTI), the temporary subscriber identity (TMSI) and simulation-side
//! bookkeeping (UE tag and ground-truth label). Detection code never sees the
//! bookkeeping: everything on the detector path works from [`MessageFields`],
//! the label-free projection of a record.

use std::fmt;

use crate::error::{Error, Result};

/// The eleven canonical message types of a registration flow, plus a
/// catch-all for everything else.
///
/// `Other` holds its text verbatim (arbitrary Unicode allowed) and by
/// construction never equals one of the canonical spellings: build values
/// through [`canonicalize_message_type`] and the invariant holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MessageType {
    RrcSetupRequest,
    RrcSetup,
    RrcSetupComplete,
    RegistrationRequest,
    AuthenticationRequest,
    AuthenticationResponse,
    NasSecurityModeCommand,
    NasSecurityModeComplete,
    RrcSecurityModeCommand,
    RrcSecurityModeComplete,
    RegistrationAccept,
    Other(String),
}

impl MessageType {
    /// All canonical variants in registration-flow order. NAS security mode
    /// precedes RRC security mode, matching the over-the-air sequence.
    pub const CANONICAL: [MessageType; 11] = [
        MessageType::RrcSetupRequest,
        MessageType::RrcSetup,
        MessageType::RrcSetupComplete,
        MessageType::RegistrationRequest,
        MessageType::AuthenticationRequest,
        MessageType::AuthenticationResponse,
        MessageType::NasSecurityModeCommand,
        MessageType::NasSecurityModeComplete,
        MessageType::RrcSecurityModeCommand,
        MessageType::RrcSecurityModeComplete,
        MessageType::RegistrationAccept,
    ];

    /// Canonical rendering of the type; `Other` renders verbatim.
    pub fn as_text(&self) -> &str {
        match self {
            MessageType::RrcSetupRequest => "RRCSetupRequest",
            MessageType::RrcSetup => "RRCSetup",
            MessageType::RrcSetupComplete => "RRCSetupComplete",
            MessageType::RegistrationRequest => "RegistrationRequest",
            MessageType::AuthenticationRequest => "AuthenticationRequest",
            MessageType::AuthenticationResponse => "AuthenticationResponse",
            MessageType::NasSecurityModeCommand => "NAS_SecurityModeCommand",
            MessageType::NasSecurityModeComplete => "NAS_SecurityModeComplete",
            MessageType::RrcSecurityModeCommand => "RRC_SecurityModeCommand",
            MessageType::RrcSecurityModeComplete => "RRC_SecurityModeComplete",
            MessageType::RegistrationAccept => "RegistrationAccept",
            MessageType::Other(text) => text,
        }
    }

    pub fn is_canonical(&self) -> bool {
        !matches!(self, MessageType::Other(_))
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_text())
    }
}

/// Maps a raw capture name onto the canonical vocabulary.
///
/// The disambiguation rules mirror how the two security-mode exchanges are
/// spelled by the network elements that emit them: the NAS layer logs
/// `Securitymodecommand` / `Securitymodecomplete`, the RRC layer logs
/// `SecurityModeCommand` / `SecurityModeComplete`. Canonical names map to
/// themselves, so the function is idempotent; any other non-empty name is
/// preserved verbatim as `Other`.
pub fn canonicalize_message_type(raw: &str) -> Result<MessageType> {
    if raw.is_empty() {
        return Err(Error::EmptyMessageName);
    }
    let ty = match raw {
        "RRCSetupRequest" => MessageType::RrcSetupRequest,
        "RRCSetup" => MessageType::RrcSetup,
        "RRCSetupComplete" => MessageType::RrcSetupComplete,
        "RegistrationRequest" => MessageType::RegistrationRequest,
        "AuthenticationRequest" => MessageType::AuthenticationRequest,
        "AuthenticationResponse" => MessageType::AuthenticationResponse,
        "NAS_SecurityModeCommand" | "Securitymodecommand" => MessageType::NasSecurityModeCommand,
        "NAS_SecurityModeComplete" | "Securitymodecomplete" => MessageType::NasSecurityModeComplete,
        "RRC_SecurityModeCommand" | "SecurityModeCommand" => MessageType::RrcSecurityModeCommand,
        "RRC_SecurityModeComplete" | "SecurityModeComplete" => MessageType::RrcSecurityModeComplete,
        "RegistrationAccept" => MessageType::RegistrationAccept,
        other => MessageType::Other(other.to_string()),
    };
    Ok(ty)
}

/// Cell-local radio network temporary identifier, 16 bits by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rnti(pub u16);

impl Rnti {
    pub fn value(self) -> u16 {
        self.0
    }
}

impl fmt::Display for Rnti {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Temporary mobile subscriber identity. Zero is the sentinel carried by a UE
/// that has not been assigned an identity yet; it never denotes a real
/// subscriber and is never matched against by identity retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tmsi(pub u32);

impl Tmsi {
    /// The "no identity assigned" sentinel.
    pub const NONE: Tmsi = Tmsi(0);

    pub fn value(self) -> u32 {
        self.0
    }

    /// True when the value denotes an actual assigned identity.
    pub fn is_assigned(self) -> bool {
        self.0 != 0
    }
}

impl fmt::Display for Tmsi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Opaque per-UE tag used only by the simulator and evaluation bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UeId(pub String);

impl UeId {
    pub fn new(id: impl Into<String>) -> Self {
        UeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UeId {
    fn from(id: &str) -> Self {
        UeId(id.to_string())
    }
}

/// Ground truth attached by the simulator. `OtherAttack` carries a non-empty
/// attack name so future attack families can share the evaluation path.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroundTruth {
    Benign,
    BlindDos,
    OtherAttack(String),
}

impl GroundTruth {
    pub fn is_attack(&self) -> bool {
        !matches!(self, GroundTruth::Benign)
    }

    /// Stable wire spelling used by trace files.
    pub fn as_label(&self) -> &str {
        match self {
            GroundTruth::Benign => "benign",
            GroundTruth::BlindDos => "blind_dos",
            GroundTruth::OtherAttack(name) => name,
        }
    }

    /// Parses a wire label. Unknown non-empty labels become `OtherAttack`.
    pub fn parse_label(label: &str) -> Result<Self> {
        if label.is_empty() {
            return Err(Error::config("ground-truth label is empty"));
        }
        let truth = match label.to_ascii_lowercase().as_str() {
            "benign" => GroundTruth::Benign,
            "blind_dos" | "blinddos" | "blind-dos" => GroundTruth::BlindDos,
            _ => GroundTruth::OtherAttack(label.to_string()),
        };
        Ok(truth)
    }
}

/// Label-free projection of a record: exactly what detector-side code may
/// observe. Keeping ground truth and the UE tag out of this type is what
/// prevents label leakage into prompts and verdicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageFields {
    pub msg_type: MessageType,
    pub rnti: Rnti,
    pub tmsi: Tmsi,
}

/// One decoded L3 message as stored in the shared data layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TelemetryRecord {
    /// Position in the store; assigned by append order, contiguous from 0.
    pub seq: u64,
    pub ue_id: UeId,
    pub msg_type: MessageType,
    pub rnti: Rnti,
    pub tmsi: Tmsi,
    pub label: GroundTruth,
}

impl TelemetryRecord {
    /// The detector-visible projection.
    pub fn fields(&self) -> MessageFields {
        MessageFields {
            msg_type: self.msg_type.clone(),
            rnti: self.rnti,
            tmsi: self.tmsi,
        }
    }
}
