//! Message fabric: wire format, the endpoint trait, and two implementations
//! ([`sim`] for deterministic in-process runs, [`tcp`] for real processes).
//!
//! Frame layout, all integers little-endian:
//!
//! ```text
//! [1B tag] [2B source rank] [4B payload length] [payload]
//! ```
//!
//! Per-pair FIFO is part of the contract: messages from rank A to rank B are
//! delivered in send order regardless of tag. The scheduler's correctness
//! leans on that (a worker's best-value report must land before the
//! availability report that follows it).

pub mod sim;
pub mod tcp;

use std::fmt;

pub type Rank = u16;

/// Hard ceiling on payload size unless a transport is built with another.
pub const MAX_PAYLOAD_DEFAULT: usize = 64 << 20;

/// Frame header size in bytes.
pub const HEADER_LEN: usize = 7;

/// Wire tag values. Codes are stable; an unknown code on the wire is a
/// protocol error, never a skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tag {
    /// New incumbent objective value, `i64`. Worker -> center to announce,
    /// center -> workers to broadcast.
    BestVal = 0x01,
    /// Worker has no work left. Empty.
    Available = 0x02,
    /// Worker began exploring a received task. Empty.
    StartedRunning = 0x03,
    /// Worker's advertised load (pending task count), `i64`.
    Metadata = 0x04,
    /// Center tells a worker to feed another: payload is the receiver rank.
    SendWork = 0x05,
    /// A serialized task. Empty payload is the seed trigger sent to the
    /// rank that loads the root instance locally.
    Work = 0x06,
    /// Empty: acknowledges a received task to its sender. With an 8-byte
    /// round number, sent to the center: "nothing in flight here, accept
    /// shutdown round N".
    TaskAck = 0x07,
    /// Center -> worker shutdown step: `[8B round][1B phase]` where the
    /// phase is prepare, verify, confirm, or hard (unconditional, timeout
    /// mode).
    Terminate = 0x08,
    /// Worker -> center: refuse the current shutdown round (this worker is
    /// exploring, holds tasks, or has unacknowledged sends).
    TerminateRefuse = 0x09,
    /// Worker -> center task donation in the centralized scheduler:
    /// `i64` priority then the serialized task.
    TaskPush = 0x10,
    /// Centralized queue reached its limit; stop pushing. Empty.
    QueueFull = 0x11,
    /// Centralized queue drained below the reopen threshold. Empty.
    QueueOpen = 0x12,
}

impl Tag {
    pub fn from_code(code: u8) -> Option<Tag> {
        Some(match code {
            0x01 => Tag::BestVal,
            0x02 => Tag::Available,
            0x03 => Tag::StartedRunning,
            0x04 => Tag::Metadata,
            0x05 => Tag::SendWork,
            0x06 => Tag::Work,
            0x07 => Tag::TaskAck,
            0x08 => Tag::Terminate,
            0x09 => Tag::TerminateRefuse,
            0x10 => Tag::TaskPush,
            0x11 => Tag::QueueFull,
            0x12 => Tag::QueueOpen,
            _ => return None,
        })
    }

    /// Payload length constraint for the tag: `Some((min, max))` exact
    /// bounds where `max = None` means unbounded above.
    fn payload_bounds(self) -> (usize, Option<usize>) {
        match self {
            Tag::BestVal | Tag::Metadata => (8, Some(8)),
            Tag::SendWork => (2, Some(2)),
            Tag::Work => (0, None),
            Tag::TaskPush => (8, None),
            Tag::TaskAck => (0, Some(8)),
            Tag::Terminate => (9, Some(9)),
            Tag::Available
            | Tag::StartedRunning
            | Tag::TerminateRefuse
            | Tag::QueueFull
            | Tag::QueueOpen => (0, Some(0)),
        }
    }
}

/// Step within a shutdown round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminatePhase {
    /// Center asks every worker whether it can stop.
    Prepare,
    /// Every worker accepted; center asks whether each acceptance still
    /// stands. Needed because a task can land on a worker after its accept
    /// left, and the worker's recant races other workers' accepts on
    /// unrelated links.
    Verify,
    /// Every worker reconfirmed; stop now.
    Confirm,
    /// Unconditional stop after a quiet window (timeout mode).
    Hard,
}

impl TerminatePhase {
    fn code(self) -> u8 {
        match self {
            TerminatePhase::Prepare => 0,
            TerminatePhase::Verify => 1,
            TerminatePhase::Confirm => 2,
            TerminatePhase::Hard => 3,
        }
    }

    fn from_code(code: u8) -> Option<TerminatePhase> {
        Some(match code {
            0 => TerminatePhase::Prepare,
            1 => TerminatePhase::Verify,
            2 => TerminatePhase::Confirm,
            3 => TerminatePhase::Hard,
            _ => return None,
        })
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Message {
    pub tag: Tag,
    pub source: Rank,
    pub payload: Vec<u8>,
}

impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}(from {}, {}B)", self.tag, self.source, self.payload.len())
    }
}

impl Message {
    pub fn new(tag: Tag, source: Rank, payload: Vec<u8>) -> Message {
        let msg = Message { tag, source, payload };
        debug_assert!(msg.schema_ok(), "malformed outgoing {msg:?}");
        msg
    }

    pub fn empty(tag: Tag, source: Rank) -> Message {
        Message::new(tag, source, Vec::new())
    }

    pub fn best_val(source: Rank, value: i64) -> Message {
        Message::new(Tag::BestVal, source, value.to_le_bytes().to_vec())
    }

    pub fn metadata(source: Rank, value: i64) -> Message {
        Message::new(Tag::Metadata, source, value.to_le_bytes().to_vec())
    }

    pub fn send_work(source: Rank, receiver: Rank) -> Message {
        Message::new(Tag::SendWork, source, receiver.to_le_bytes().to_vec())
    }

    pub fn work(source: Rank, task: Vec<u8>) -> Message {
        Message::new(Tag::Work, source, task)
    }

    pub fn task_push(source: Rank, priority: i64, task: &[u8]) -> Message {
        let mut payload = priority.to_le_bytes().to_vec();
        payload.extend_from_slice(task);
        Message::new(Tag::TaskPush, source, payload)
    }

    pub fn terminate(source: Rank, round: u64, phase: TerminatePhase) -> Message {
        let mut payload = round.to_le_bytes().to_vec();
        payload.push(phase.code());
        Message::new(Tag::Terminate, source, payload)
    }

    /// Plain acknowledgement of a received task.
    pub fn ack_task(source: Rank) -> Message {
        Message::empty(Tag::TaskAck, source)
    }

    /// Acceptance of shutdown round `round`, sent to the center.
    pub fn accept_termination(source: Rank, round: u64) -> Message {
        Message::new(Tag::TaskAck, source, round.to_le_bytes().to_vec())
    }

    fn schema_ok(&self) -> bool {
        let (min, max) = self.tag.payload_bounds();
        if self.payload.len() < min || max.is_some_and(|m| self.payload.len() > m) {
            return false;
        }
        // Bounds with holes or structure inside the payload.
        match self.tag {
            Tag::TaskAck => self.payload.is_empty() || self.payload.len() == 8,
            Tag::Terminate => TerminatePhase::from_code(self.payload[8]).is_some(),
            _ => true,
        }
    }

    /// `i64` payload of `BestVal` / `Metadata`.
    pub fn value_i64(&self) -> i64 {
        debug_assert!(matches!(self.tag, Tag::BestVal | Tag::Metadata));
        i64::from_le_bytes(self.payload[..8].try_into().unwrap())
    }

    /// Receiver rank carried by `SendWork`.
    pub fn receiver_rank(&self) -> Rank {
        debug_assert_eq!(self.tag, Tag::SendWork);
        Rank::from_le_bytes(self.payload[..2].try_into().unwrap())
    }

    /// Priority and task bytes carried by `TaskPush`.
    pub fn push_parts(&self) -> (i64, &[u8]) {
        debug_assert_eq!(self.tag, Tag::TaskPush);
        let priority = i64::from_le_bytes(self.payload[..8].try_into().unwrap());
        (priority, &self.payload[8..])
    }

    /// Round and phase carried by `Terminate`.
    pub fn terminate_parts(&self) -> (u64, TerminatePhase) {
        debug_assert_eq!(self.tag, Tag::Terminate);
        let round = u64::from_le_bytes(self.payload[..8].try_into().unwrap());
        let phase = TerminatePhase::from_code(self.payload[8]).expect("validated on decode");
        (round, phase)
    }

    /// For `TaskAck`: the accepted shutdown round, or `None` for a plain
    /// task acknowledgement.
    pub fn ack_round(&self) -> Option<u64> {
        debug_assert_eq!(self.tag, Tag::TaskAck);
        if self.payload.len() == 8 {
            Some(u64::from_le_bytes(self.payload[..8].try_into().unwrap()))
        } else {
            None
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("unknown tag 0x{code:02x} in header {header:02x?}")]
    UnknownTag { code: u8, header: [u8; HEADER_LEN] },
    #[error("payload of {len} bytes exceeds limit {max}")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("{tag:?} payload of {len} bytes violates its schema")]
    Schema { tag: Tag, len: usize },
    #[error("endpoint is closed")]
    Closed,
    #[error("rank {0} is not part of this fabric")]
    NoSuchRank(Rank),
    #[error("rank file: {0}")]
    RankFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Encode one frame onto `out`.
pub fn encode_frame(msg: &Message, out: &mut Vec<u8>) {
    out.push(msg.tag as u8);
    out.extend_from_slice(&msg.source.to_le_bytes());
    out.extend_from_slice(&(msg.payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&msg.payload);
}

/// Decode one frame from the front of `buf`. Returns the message and the
/// number of bytes consumed, or `None` when more bytes are needed.
pub fn decode_frame(buf: &[u8], max_payload: usize) -> Result<Option<(Message, usize)>, TransportError> {
    if buf.len() < HEADER_LEN {
        return Ok(None);
    }
    let header: [u8; HEADER_LEN] = buf[..HEADER_LEN].try_into().unwrap();
    let tag = Tag::from_code(header[0]).ok_or(TransportError::UnknownTag {
        code: header[0],
        header,
    })?;
    let source = Rank::from_le_bytes(header[1..3].try_into().unwrap());
    let len = u32::from_le_bytes(header[3..7].try_into().unwrap()) as usize;
    if len > max_payload {
        return Err(TransportError::PayloadTooLarge { len, max: max_payload });
    }
    let (min, max) = tag.payload_bounds();
    if len < min || max.is_some_and(|m| len > m) {
        return Err(TransportError::Schema { tag, len });
    }
    if buf.len() < HEADER_LEN + len {
        return Ok(None);
    }
    let payload = buf[HEADER_LEN..HEADER_LEN + len].to_vec();
    let msg = Message { tag, source, payload };
    // Catches constraints the header alone cannot (length holes, bad
    // phase bytes).
    if !msg.schema_ok() {
        return Err(TransportError::Schema { tag, len });
    }
    Ok(Some((msg, HEADER_LEN + len)))
}

/// One rank's endpoint into the fabric.
///
/// Endpoints are owned by a single communication loop per rank; they are not
/// meant to be shared across threads. Both calls are non-blocking with
/// respect to remote ranks: `send_async` only queues locally and
/// `try_receive` returns `None` rather than waiting.
pub trait Transport {
    fn rank(&self) -> Rank;

    /// Ranks in the fabric, center included (so `p + 1` for `p` workers).
    fn num_ranks(&self) -> u16;

    fn send_async(&mut self, dest: Rank, msg: Message) -> Result<(), TransportError>;

    fn try_receive(&mut self) -> Result<Option<Message>, TransportError>;

    /// Push queued sends toward the wire. May block on local buffers only.
    fn flush_outbound(&mut self) -> Result<(), TransportError>;

    fn close(&mut self) -> Result<(), TransportError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip_all_tags() {
        let messages = vec![
            Message::best_val(3, -42),
            Message::empty(Tag::Available, 1),
            Message::empty(Tag::StartedRunning, 9),
            Message::metadata(2, i64::MAX),
            Message::send_work(0, 7),
            Message::work(4, vec![1, 2, 3, 4, 5]),
            Message::work(4, vec![]),
            Message::ack_task(5),
            Message::accept_termination(5, 3),
            Message::terminate(0, 1, TerminatePhase::Prepare),
            Message::terminate(0, 1, TerminatePhase::Verify),
            Message::terminate(0, 1, TerminatePhase::Confirm),
            Message::terminate(0, 9, TerminatePhase::Hard),
            Message::empty(Tag::TerminateRefuse, 6),
            Message::task_push(8, 1234, &[9, 9]),
            Message::empty(Tag::QueueFull, 0),
            Message::empty(Tag::QueueOpen, 0),
        ];
        let mut wire = Vec::new();
        for m in &messages {
            encode_frame(m, &mut wire);
        }
        let mut off = 0;
        for want in &messages {
            let (got, used) = decode_frame(&wire[off..], MAX_PAYLOAD_DEFAULT)
                .unwrap()
                .expect("complete frame");
            assert_eq!(&got, want);
            off += used;
        }
        assert_eq!(off, wire.len());
    }

    #[test]
    fn unknown_tag_is_a_protocol_error() {
        let mut wire = Vec::new();
        encode_frame(&Message::empty(Tag::Available, 1), &mut wire);
        wire[0] = 0x7f;
        match decode_frame(&wire, MAX_PAYLOAD_DEFAULT) {
            Err(TransportError::UnknownTag { code: 0x7f, header }) => {
                assert_eq!(header[0], 0x7f);
            }
            other => panic!("expected unknown-tag error, got {other:?}"),
        }
    }

    #[test]
    fn oversized_payload_is_rejected_by_header_alone() {
        let mut wire = vec![Tag::Work as u8, 0, 0];
        wire.extend_from_slice(&(101u32).to_le_bytes());
        // No payload bytes attached; the length field alone must trip it.
        match decode_frame(&wire, 100) {
            Err(TransportError::PayloadTooLarge { len: 101, max: 100 }) => {}
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn schema_violations_are_rejected() {
        // BestVal with a 3-byte payload.
        let mut wire = vec![Tag::BestVal as u8, 0, 0];
        wire.extend_from_slice(&(3u32).to_le_bytes());
        wire.extend_from_slice(&[1, 2, 3]);
        assert!(matches!(
            decode_frame(&wire, MAX_PAYLOAD_DEFAULT),
            Err(TransportError::Schema { tag: Tag::BestVal, len: 3 })
        ));
    }

    #[test]
    fn partial_frames_ask_for_more() {
        let mut wire = Vec::new();
        encode_frame(&Message::work(2, vec![0; 16]), &mut wire);
        for cut in [0, 3, HEADER_LEN, HEADER_LEN + 15] {
            assert!(decode_frame(&wire[..cut], MAX_PAYLOAD_DEFAULT).unwrap().is_none());
        }
        assert!(decode_frame(&wire, MAX_PAYLOAD_DEFAULT).unwrap().is_some());
    }

    #[test]
    fn accessors_decode_payloads() {
        assert_eq!(Message::best_val(1, -5).value_i64(), -5);
        assert_eq!(Message::send_work(0, 513).receiver_rank(), 513);
        let push = Message::task_push(1, 99, &[7, 8]);
        assert_eq!(push.push_parts(), (99, &[7u8, 8][..]));
        assert_eq!(
            Message::terminate(0, 4, TerminatePhase::Confirm).terminate_parts(),
            (4, TerminatePhase::Confirm)
        );
        assert_eq!(Message::ack_task(2).ack_round(), None);
        assert_eq!(Message::accept_termination(2, 7).ack_round(), Some(7));
    }

    #[test]
    fn structured_payloads_are_validated_past_the_header() {
        // TaskAck length must be 0 or 8; 4 sits inside the bounds but in a
        // hole.
        let mut wire = vec![Tag::TaskAck as u8, 1, 0];
        wire.extend_from_slice(&(4u32).to_le_bytes());
        wire.extend_from_slice(&[0; 4]);
        assert!(matches!(
            decode_frame(&wire, MAX_PAYLOAD_DEFAULT),
            Err(TransportError::Schema { tag: Tag::TaskAck, len: 4 })
        ));

        // Terminate with an unknown phase byte.
        let mut wire = vec![Tag::Terminate as u8, 0, 0];
        wire.extend_from_slice(&(9u32).to_le_bytes());
        wire.extend_from_slice(&1u64.to_le_bytes());
        wire.push(7);
        assert!(matches!(
            decode_frame(&wire, MAX_PAYLOAD_DEFAULT),
            Err(TransportError::Schema { tag: Tag::Terminate, len: 9 })
        ));
    }
}
